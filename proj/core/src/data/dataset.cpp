#include "ppgbp/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ppgbp/common/bytes.hpp"
#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/data/store.hpp"

namespace ppgbp::data {

using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

std::vector<SubjectStats> compute_stats(std::span<const WindowSample> samples,
                                        const SegmentationScheme& scheme) {
  std::map<std::uint32_t, SubjectStats> by_subject;
  for (const auto& s : samples) {
    auto& st = by_subject[s.subject_id];
    if (st.per_bin.empty()) {
      st.subject_id = s.subject_id;
      st.per_bin.assign(scheme.n_bins(), 0);
    }
    ++st.total;
    ++st.per_bin[assign_bin(s.sbp, scheme)];
  }
  std::vector<SubjectStats> out;
  for (auto& [id, st] : by_subject) out.push_back(std::move(st));
  return out;
}

std::vector<std::uint32_t> eligible_subjects(std::span<const SubjectStats> stats,
                                             const SegmentationScheme& scheme,
                                             std::size_t min_windows, std::size_t quota) {
  std::vector<std::uint32_t> out;
  for (const auto& st : stats) {
    if (st.total < min_windows || st.per_bin.size() != scheme.n_bins()) continue;
    if (std::all_of(st.per_bin.begin(), st.per_bin.end(), [&](std::size_t c) { return c >= quota; }))
      out.push_back(st.subject_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<WindowSample> balance(std::span<const WindowSample> samples,
                                  std::span<const std::uint32_t> subjects,
                                  const SegmentationScheme& scheme, std::size_t quota,
                                  std::uint64_t seed) {
  std::vector<std::uint32_t> ids(subjects.begin(), subjects.end());
  std::sort(ids.begin(), ids.end());

  // group indices per (subject, bin), each group in window_index order
  std::map<std::pair<std::uint32_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::binary_search(ids.begin(), ids.end(), samples[i].subject_id)) continue;
    groups[{samples[i].subject_id, assign_bin(samples[i].sbp, scheme)}].push_back(i);
  }

  std::vector<WindowSample> out;
  out.reserve(ids.size() * scheme.n_bins() * quota);
  for (std::uint32_t id : ids) {
    for (std::size_t bin = 0; bin < scheme.n_bins(); ++bin) {
      auto it = groups.find({id, bin});
      const std::size_t available = it == groups.end() ? 0 : it->second.size();
      if (available < quota)
        throw std::logic_error("balance: subject " + std::to_string(id) + " bin " +
                               std::to_string(bin) + " has " + std::to_string(available) +
                               " windows, quota " + std::to_string(quota));
      auto idx = it->second;
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].window_index < samples[b].window_index;
      });
      // partial Fisher-Yates: first `quota` slots become a uniform draw
      Rng rng(mix_seed(seed, id, bin));
      for (std::size_t k = 0; k < quota; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
        std::swap(idx[k], idx[j]);
      }
      idx.resize(quota);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].window_index < samples[b].window_index;
      });
      for (std::size_t i : idx) out.push_back(samples[i]);
    }
  }
  return out;
}

SubjectSplit split_subjects(std::span<const std::uint32_t> subjects,
                            std::span<const double> fractions, std::uint64_t seed) {
  if (fractions.size() != 3)
    throw ConfigError("split: exactly three fractions (train:val:test) required, got " +
                      std::to_string(fractions.size()));
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split: fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");
  if (subjects.size() < 3)
    throw ConfigError("split: need at least 3 subjects, got " + std::to_string(subjects.size()));

  std::vector<std::uint32_t> ids(subjects.begin(), subjects.end());
  std::sort(ids.begin(), ids.end());
  Rng rng(mix_seed(seed, 0x5bd1e995ULL));
  rng.shuffle(ids);

  const std::size_t n = ids.size();
  const auto n_train = std::min<std::size_t>(n, std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val =
      std::min<std::size_t>(n - n_train, std::llround(fractions[1] * static_cast<double>(n)));

  SubjectSplit out;
  out.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                 ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  for (auto* set : {&out.train, &out.val, &out.test}) std::sort(set->begin(), set->end());
  return out;
}

PersonalizationSplit personalization_split(std::span<const WindowSample> subject_samples,
                                           std::size_t take_every) {
  if (take_every < 2) throw ConfigError("personalization: take_every must be >= 2");
  const std::size_t n = subject_samples.size();
  if (n < 2 * take_every)
    throw RejectionError("personalization: subject has " + std::to_string(n) +
                         " samples, needs at least " + std::to_string(2 * take_every));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = subject_samples[a];
    const auto& sb = subject_samples[b];
    if (sa.sbp != sb.sbp) return sa.sbp < sb.sbp;
    return sa.window_index < sb.window_index;
  });

  PersonalizationSplit out;
  bool to_val = true;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (rank % take_every == 0) {
      out.finetune.push_back(order[rank]);
    } else {
      (to_val ? out.val : out.test).push_back(order[rank]);
      to_val = !to_val;
    }
  }
  return out;
}

std::vector<WindowSample> BalancedDataset::samples_of(Split split) const {
  std::vector<WindowSample> out;
  for (const auto& s : samples) {
    auto it = split_assignment.find(s.subject_id);
    if (it != split_assignment.end() && it->second == split) out.push_back(s);
  }
  return out;
}

std::vector<WindowSample> BalancedDataset::samples_of_subject(std::uint32_t subject_id) const {
  std::vector<WindowSample> out;
  for (const auto& s : samples)
    if (s.subject_id == subject_id) out.push_back(s);
  return out;
}

std::vector<std::uint32_t> BalancedDataset::subjects_of(Split split) const {
  std::vector<std::uint32_t> out;
  for (const auto& [id, sp] : split_assignment)
    if (sp == split) out.push_back(id);
  return out;
}

BalancedDataset build_dataset(std::span<const WindowSample> samples, const SegmentationScheme& scheme,
                              const DatasetOptions& options) {
  if (options.quota == 0) throw ConfigError("dataset: quota must be >= 1");
  const auto stats = compute_stats(samples, scheme);
  const auto eligible = eligible_subjects(stats, scheme, options.min_windows, options.quota);
  if (eligible.size() < 3)
    throw ConfigError("dataset: only " + std::to_string(eligible.size()) +
                      " eligible subjects under scheme " + scheme.name + " with quota " +
                      std::to_string(options.quota) + " (need >= 3)");

  BalancedDataset ds;
  ds.scheme = scheme;
  ds.quota = options.quota;
  ds.min_windows = options.min_windows;
  ds.seed = options.seed;
  ds.fractions = options.fractions;
  ds.samples = balance(samples, eligible, scheme, options.quota, options.seed);
  const auto split = split_subjects(eligible, options.fractions, options.seed);
  for (auto id : split.train) ds.split_assignment[id] = Split::train;
  for (auto id : split.val) ds.split_assignment[id] = Split::val;
  for (auto id : split.test) ds.split_assignment[id] = Split::test;
  return ds;
}

std::string manifest_json(const BalancedDataset& ds) {
  json j;
  j["format"] = "ppgbp-dataset-manifest";
  j["version"] = 1;
  j["store"] = "samples.ppgw";
  j["scheme"] = {{"name", ds.scheme.name}, {"edges", ds.scheme.edges}};
  j["quota"] = ds.quota;
  j["min_windows"] = ds.min_windows;
  j["seed"] = ds.seed;
  j["fractions"] = ds.fractions;
  j["n_samples"] = ds.samples.size();
  json splits = json::object();
  for (Split sp : {Split::train, Split::val, Split::test}) splits[to_string(sp)] = ds.subjects_of(sp);
  j["splits"] = splits;
  return j.dump(2) + "\n";
}

void save_dataset(const BalancedDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto n_samp = dataset.samples.empty()
                          ? kDefaultSamplesPerWindow
                          : static_cast<std::uint32_t>(dataset.samples.front().ppg.size());
  write_store(dataset.samples, dir / "samples.ppgw", n_samp);
  write_text_file(dir / "manifest.json", manifest_json(dataset));
}

BalancedDataset load_dataset(const std::filesystem::path& dir) {
  const auto text = read_text_file(dir / "manifest.json");
  BalancedDataset ds;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "ppgbp-dataset-manifest")
      throw FormatError("manifest: unexpected format tag", 0);
    ds.scheme = make_custom_scheme(j.at("scheme").at("name").get<std::string>(),
                                   j.at("scheme").at("edges").get<std::vector<double>>());
    ds.quota = j.at("quota").get<std::size_t>();
    ds.min_windows = j.at("min_windows").get<std::size_t>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.fractions = j.at("fractions").get<std::array<double, 3>>();
    for (Split sp : {Split::train, Split::val, Split::test})
      for (auto id : j.at("splits").at(to_string(sp)).get<std::vector<std::uint32_t>>())
        ds.split_assignment[id] = sp;
    ds.samples = read_store(dir / j.at("store").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what(), 0);
  }
  return ds;
}

}  // namespace ppgbp::data
