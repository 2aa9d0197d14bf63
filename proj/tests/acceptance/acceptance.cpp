// Acceptance harness: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "ppgbp/cli/cli.hpp"
#include "ppgbp/common/bytes.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/data/dataset.hpp"
#include "ppgbp/data/preprocess.hpp"
#include "ppgbp/dsp/filter.hpp"
#include "ppgbp/eval/metrics.hpp"
#include "ppgbp/nn/architecture.hpp"
#include "ppgbp/nn/loss.hpp"
#include "ppgbp/nn/network.hpp"
#include "ppgbp/nn/optim.hpp"
#include "ppgbp/synth/generator.hpp"
#include "ppgbp/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace ppgbp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<std::string> kSchemes{"hph", "even4", "dgk", "even10"};

std::vector<data::WindowSample> preprocess_all(const std::vector<data::SubjectRecord>& records) {
  std::vector<data::WindowSample> all;
  for (const auto& r : records) {
    auto res = data::preprocess_record(r);
    all.insert(all.end(), res.samples.begin(), res.samples.end());
  }
  return all;
}

data::BalancedDataset synthetic_dataset(std::uint64_t seed, std::size_t subjects, const data::SegmentationScheme& s,
                                        std::size_t quota, std::array<double, 3> fractions) {
  const auto records = synth::generate_corpus(seed, subjects, s, quota);
  const auto windows = preprocess_all(records);
  data::DatasetOptions opt;
  opt.quota = quota;
  opt.min_windows = quota * s.n_bins();
  opt.fractions = fractions;
  opt.seed = seed;
  return data::build_dataset(windows, s, opt);
}

// 1. Balanced totals equal subjects x bins x quota.
Outcome table_identity(const fs::path&) {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;
  for (const auto& name : kSchemes) {
    const auto s = data::make_scheme(name);
    const std::size_t quota = 6;
    const auto ds = synthetic_dataset(101, 5, s, quota, data::kDefaultSplitFractions);
    std::map<std::pair<std::uint32_t, std::size_t>, std::size_t> groups;
    for (const auto& x : ds.samples) ++groups[{x.subject_id, data::assign_bin(x.sbp, s)}];
    bool exact = ds.samples.size() == ds.n_subjects() * s.n_bins() * quota &&
                 groups.size() == ds.n_subjects() * s.n_bins();
    for (const auto& [k, n] : groups) exact = exact && n == quota;
    ok = ok && exact && ds.n_subjects() == 5;
    detail += name + "=" + std::to_string(ds.samples.size()) + " ";
  }
  struct Row {
    std::size_t subjects, bins, quota, total;
  };
  const std::vector<Row> paper{{1214, 3, 1000, 3642000}, {475, 4, 1000, 1900000}, {189, 6, 1000, 1134000},
                               {94, 10, 1000, 940000}};
  for (std::size_t i = 0; i < paper.size(); ++i) {
    const auto& r = paper[i];
    ok = ok && r.subjects * r.bins * r.quota == r.total && data::make_scheme(kSchemes[i]).n_bins() == r.bins;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, detail + "paper rows consistent, " + fmt("%.2f s", secs)};
}

// 2. Finite-difference gradient oracle over 20 seeds.
Outcome gradient_oracle(const fs::path&) {
  const auto t0 = Clock::now();
  const auto results = test::full_gradient_suite(20);
  double worst = 0.0;
  std::string worst_what;
  std::size_t kinks = 0;
  for (const auto& r : results) {
    if (r.rel_error > worst) {
      worst = r.rel_error;
      worst_what = r.what;
    }
    kinks += r.kink;
  }
  const double secs = seconds_since(t0);
  const bool ok = results.size() >= 200 && worst < test::kTolerance && kinks == 0 && secs < 120.0;
  return {ok, std::to_string(results.size()) + " checks, max rel error " + fmt("%.2e", worst) + " (" + worst_what +
                  "), " + fmt("%.1f s", secs)};
}

double dft_magnitude(const dsp::IIRCoefficients& c, double f, double fs, std::size_t n = 40000) {
  std::vector<double> impulse(n, 0.0);
  impulse[0] = 1.0;
  const auto h = dsp::filter_forward(impulse, c);
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += h[k] * std::polar(1.0, -2.0 * M_PI * f * static_cast<double>(k) / fs);
  return std::abs(acc);
}

// 3. Filter magnitude at the band edges and in the passband.
Outcome filter_oracle(const fs::path&) {
  const auto t0 = Clock::now();
  const auto c = dsp::design_bandpass({});
  const double lo = 20 * std::log10(dft_magnitude(c, 0.5, 125.0));
  const double hi = 20 * std::log10(dft_magnitude(c, 8.0, 125.0));
  const double mid = 20 * std::log10(dft_magnitude(c, 2.0, 125.0));
  bool ok = std::abs(lo + 3) <= 0.5 && std::abs(hi + 3) <= 0.5 && std::abs(mid) <= 0.1;
  std::string detail = "single " + fmt("%.3f", lo) + "/" + fmt("%.3f", hi) + "/" + fmt("%.4f dB", mid);

  // forward-backward: measured on long sinusoids away from the edges
  std::string fb;
  for (double f : {0.5, 8.0}) {
    std::vector<double> x(25000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * M_PI * f * static_cast<double>(i) / 125.0);
    const auto y = dsp::apply_filter(x, c);
    double peak = 0.0;
    for (std::size_t i = x.size() / 5; i < x.size() * 4 / 5; ++i) peak = std::max(peak, std::abs(y[i]));
    const double d = 20 * std::log10(peak);
    ok = ok && std::abs(d + 6) <= 1.0;
    fb += fmt("%.3f ", d);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, detail + ", forward-backward " + fb + "dB, " + fmt("%.2f s", secs)};
}

// 4. Untrained desk model sits at chance on a balanced set.
Outcome chance_floor(const fs::path&) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& name : kSchemes) {
    const auto s = data::make_scheme(name);
    const std::size_t subjects = 10;
    const std::size_t quota = (4000 + subjects * s.n_bins() - 1) / (subjects * s.n_bins());
    const auto ds = synthetic_dataset(202, subjects, s, quota, data::kDefaultSplitFractions);
    const auto arch = nn::build_architecture("resnet18", nn::Task::classification, s.n_bins(), nn::Profile::desk);
    nn::Network<float> net(arch, mix_seed(202, 0x1a));
    const auto r = eval::evaluate(net, ds.samples, s, "all");
    const double chance = 1.0 / static_cast<double>(s.n_bins());
    ok = ok && ds.samples.size() >= 4000 && std::abs(r.accuracy - chance) <= 0.05;
    detail += name + " " + fmt("%.3f", r.accuracy) + " (n=" + std::to_string(ds.samples.size()) + ") ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, detail + fmt("%.1f s", secs)};
}

constexpr std::size_t kOrderingMaxEpochs = 40;

// 5. Fewer bins, higher accuracy.
Outcome scheme_ordering(const fs::path&) {
  const auto t0 = Clock::now();
  std::vector<double> acc;
  bool above_chance = true;
  std::string detail;
  for (const auto& name : kSchemes) {
    const auto s = data::make_scheme(name);
    const auto ds = synthetic_dataset(303, 20, s, 50, {0.6, 0.2, 0.2});
    train::TrainConfig c;
    c.architecture = "resnet18";
    c.profile = nn::Profile::desk;
    c.task = nn::Task::classification;
    c.max_epochs = kOrderingMaxEpochs;
    c.seed = 303;
    const auto result = train::pretrain(ds, c);
    const auto r = eval::evaluate(result.checkpoint, ds.samples_of(data::Split::test), s, "test");
    acc.push_back(r.accuracy);
    above_chance = above_chance && r.accuracy > 1.0 / static_cast<double>(s.n_bins());
    detail += name + " " + fmt("%.3f", r.accuracy) + " (best epoch " + std::to_string(result.log.best_epoch) + ") ";
    std::fprintf(stderr, "criterion 5: %s accuracy %.4f after %zu epochs, %.0f s elapsed\n", name.c_str(),
                 r.accuracy, result.log.epochs.size(), seconds_since(t0));
  }
  const bool ordered = acc[0] > acc[1] && acc[1] > acc[2] && acc[2] > acc[3];
  const double secs = seconds_since(t0);
  return {ordered && above_chance && secs < 1800.0, detail + fmt("%.0f s", secs)};
}

// 6. Fine-tuning helps nearly every held-out subject.
Outcome personalization_gain(const fs::path&) {
  const auto t0 = Clock::now();
  const auto s = data::make_scheme("even4");
  const auto ds = synthetic_dataset(404, 30, s, 50, {0.5, 1.0 / 6.0, 1.0 / 3.0});
  const auto subjects = train::select_personalization_subjects(ds.subjects_of(data::Split::test), 10, 404);
  bool ok = true;
  std::string detail;
  for (const auto task : {nn::Task::classification, nn::Task::regression}) {
    train::TrainConfig c;
    c.task = task;
    c.max_epochs = 30;
    c.seed = 404;
    const auto pre = train::pretrain(ds, c);
    std::size_t improved = 0;
    double gain = 0.0;
    for (auto id : subjects) {
      train::PersonalizeConfig pc;
      pc.seed = mix_seed(404, id);
      const auto r = train::personalize(pre.checkpoint, ds.samples_of_subject(id), s, pc);
      improved += r.post_accuracy >= r.pre_accuracy;
      gain += r.post_accuracy - r.pre_accuracy;
    }
    gain /= static_cast<double>(subjects.size());
    ok = ok && improved >= 8 && gain > 0.0;
    detail += nn::to_string(task) + " " + std::to_string(improved) + "/10 mean gain " + fmt("%+.3f", gain) + " ";
    std::fprintf(stderr, "criterion 6: %s %zu/10 improved, mean gain %.4f, %.0f s elapsed\n",
                 nn::to_string(task).c_str(), improved, gain, seconds_since(t0));
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 1200.0, detail + fmt("%.0f s", secs)};
}

// 7. Subject-disjoint splits and disjoint personalization index sets.
Outcome split_hygiene(const fs::path&) {
  const auto t0 = Clock::now();
  const auto s = data::make_scheme("even4");
  bool ok = true;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(seed, 7));
    const std::size_t n_subjects = 5 + rng.below(60);
    const std::size_t quota = 2 + rng.below(4);
    std::vector<data::WindowSample> samples;
    for (std::uint32_t id = 1; id <= n_subjects; ++id)
      for (std::size_t b = 0; b < s.n_bins(); ++b)
        for (std::size_t k = 0; k < quota + rng.below(3); ++k) {
          data::WindowSample w;
          w.subject_id = id * 3 + 100;
          w.window_index = static_cast<std::uint32_t>(samples.size());
          w.sbp = static_cast<float>(rng.uniform(s.edges[b], s.edges[b + 1] - 1e-3));
          w.hr = 70.0f;
          w.ppg.assign(4, 0.0f);
          samples.push_back(w);
        }
    data::DatasetOptions opt;
    opt.quota = quota;
    opt.min_windows = quota * s.n_bins();
    opt.seed = seed;
    const auto ds = data::build_dataset(samples, s, opt);

    std::map<std::uint32_t, std::set<data::Split>> seen;
    for (auto split : {data::Split::train, data::Split::val, data::Split::test})
      for (const auto& x : ds.samples_of(split)) seen[x.subject_id].insert(split);
    for (const auto& [id, splits] : seen) ok = ok && splits.size() == 1;
    const auto n = static_cast<double>(n_subjects);
    ok = ok && seen.size() == n_subjects &&
         ds.subjects_of(data::Split::train).size() == static_cast<std::size_t>(std::llround(0.70 * n)) &&
         ds.subjects_of(data::Split::val).size() == static_cast<std::size_t>(std::llround(0.225 * n)) &&
         ds.subjects_of(data::Split::train).size() + ds.subjects_of(data::Split::val).size() +
                 ds.subjects_of(data::Split::test).size() ==
             n_subjects;

    const auto one = ds.samples_of_subject(ds.samples.front().subject_id);
    const std::size_t take_every = 2 + rng.below(5);
    if (one.size() >= 2 * take_every) {
      const auto p = data::personalization_split(one, take_every);
      std::set<std::size_t> a(p.finetune.begin(), p.finetune.end()), b(p.val.begin(), p.val.end()),
          c(p.test.begin(), p.test.end());
      std::vector<std::size_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      std::set_intersection(a.begin(), a.end(), c.begin(), c.end(), std::back_inserter(common));
      std::set_intersection(b.begin(), b.end(), c.begin(), c.end(), std::back_inserter(common));
      ok = ok && common.empty() && a.size() + b.size() + c.size() == one.size();
    }
    ++checked;
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 10.0, std::to_string(checked) + " seeds, " + fmt("%.2f s", secs)};
}

// 8. Confusion-matrix and bin-mapping contracts.
Outcome confusion_contracts(const fs::path&) {
  const auto t0 = Clock::now();
  Rng rng(808);
  bool ok = true;
  double worst_row = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t bins = 2 + rng.below(9), n = 1 + rng.below(400);
    std::vector<std::size_t> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.below(bins);
      truth[i] = rng.below(bins / 2 + 1);
    }
    const auto cm = eval::confusion_matrix(pred, truth, bins);
    double weighted = 0.0;
    for (std::size_t r = 0; r < bins; ++r) {
      std::size_t count = 0;
      for (auto v : cm.raw[r]) count += v;
      double sum = 0.0;
      for (double v : cm.normalized[r]) sum += v;
      if (count == 0) {
        ok = ok && cm.empty_row[r] && sum == 0.0;
      } else {
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
        weighted += cm.normalized[r][r] * static_cast<double>(count);
      }
    }
    const double acc = eval::accuracy(pred, truth);
    ok = ok && std::abs(weighted / static_cast<double>(n) - acc) < 1e-12 &&
         std::abs(acc - static_cast<double>(cm.trace()) / static_cast<double>(cm.total())) < 1e-15;
  }
  ok = ok && worst_row <= 1e-6;

  std::size_t mismatches = 0;
  for (const auto& name : kSchemes) {
    const auto s = data::make_scheme(name);
    nn::Tensor<float> out({10000, 1});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(rng.uniform(40.0, 220.0));
    const auto bins = eval::predict_bins(out, nn::Task::regression, s);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double v = out[i];
      std::size_t expect = s.n_bins() - 1;
      if (v < s.edges[0]) {
        expect = 0;
      } else {
        for (std::size_t b = 0; b < s.n_bins(); ++b)
          if (v >= s.edges[b] && v < s.edges[b + 1]) {
            expect = b;
            break;
          }
      }
      mismatches += bins[i] != expect;
    }
  }
  ok = ok && mismatches == 0;
  const double secs = seconds_since(t0);
  return {ok && secs < 10.0, "max row deviation " + fmt("%.1e", worst_row) + ", " + std::to_string(mismatches) +
                                 " bin mismatches over 4x10000 values, " + fmt("%.2f s", secs)};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

bool run_pipeline(const fs::path& dir) {
  const std::string d = dir.string();
  return cli({"synth", "--seed", "9", "--subjects", "6", "--scheme", "even4", "--target-windows", "12", "--out",
              d + "/raw", "--jobs", "2"}) == 0 &&
         cli({"preprocess", "--in", d + "/raw", "--out", d + "/windows", "--jobs", "2"}) == 0 &&
         cli({"build-dataset", "--in", d + "/windows", "--scheme", "even4", "--quota", "8", "--min-windows", "32",
              "--seed", "9", "--out", d + "/dataset"}) == 0 &&
         cli({"train", "--dataset", d + "/dataset", "--arch", "resnet18", "--task", "classification", "--profile",
              "desk", "--batch-size", "16", "--max-epochs", "3", "--seed", "9", "--out", d + "/runs/cls"}) == 0 &&
         cli({"evaluate", "--checkpoint", d + "/runs/cls/checkpoint.ppgm", "--dataset", d + "/dataset", "--report",
              d + "/runs/cls/eval_test.csv"}) == 0 &&
         cli({"personalize", "--checkpoint", d + "/runs/cls/checkpoint.ppgm", "--dataset", d + "/dataset",
              "--subjects", "1", "--take-every", "4", "--epochs", "3", "--seed", "9", "--out",
              d + "/runs/personal"}) == 0 &&
         cli({"report", "--runs", d + "/runs", "--out", d + "/summary.csv"}) == 0;
}

// 9. Identical seeds give identical artifacts.
Outcome determinism(const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path a = work / "determinism_a", b = work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  if (!run_pipeline(a) || !run_pipeline(b)) return {false, "pipeline run failed"};
  std::size_t compared = 0, differing = 0;
  std::string first_diff;
  std::set<std::string> kinds;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".ppgr" && ext != ".ppgw" && ext != ".ppgm" && ext != ".csv") continue;
    const auto rel = fs::relative(entry.path(), a);
    ++compared;
    kinds.insert(ext);
    if (!fs::exists(b / rel) || read_file(entry.path()) != read_file(b / rel)) {
      ++differing;
      if (first_diff.empty()) first_diff = rel.string();
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = differing == 0 && kinds.size() == 4 && secs < 600.0;
  return {ok, std::to_string(compared) + " artifacts compared, " + std::to_string(differing) + " differ" +
                  (first_diff.empty() ? "" : " (" + first_diff + ")") + ", " + fmt("%.0f s", secs)};
}

// 10. Softmax and Adam closed forms.
Outcome closed_forms(const fs::path&) {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst_loss = 0.0, worst_step = 0.0;
  for (std::size_t n : {3, 4, 6, 10}) {
    nn::Tensor<double> logits({5, n}, 0.7);
    const std::vector<std::size_t> labels{0, n - 1, 1, 2 % n, 0};
    const auto r = nn::softmax_cross_entropy(logits, labels);
    worst_loss = std::max(worst_loss, std::abs(r.loss - std::log(static_cast<double>(n))));
  }
  ok = ok && worst_loss <= 1e-6;
  Rng rng(1010);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> w(n), g(n), m(n, 0.0), v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = rng.normal();
      g[i] = (rng.below(2) ? 1.0 : -1.0) * std::exp(rng.uniform(std::log(0.02), std::log(100.0)));
    }
    const auto before = w;
    nn::AdamOptions cfg;
    cfg.lr = rng.uniform(1e-4, 1e-1);
    nn::adam_update<double>(w, std::span<const double>(g), m, v, 1, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = -cfg.lr * (g[i] > 0 ? 1.0 : -1.0);
      worst_step = std::max(worst_step, std::abs((w[i] - before[i]) / expected - 1.0));
    }
  }
  ok = ok && worst_step <= 1e-6;
  const double secs = seconds_since(t0);
  return {ok && secs < 1.0, "max |loss - ln N| " + fmt("%.1e", worst_loss) + ", max Adam step deviation " +
                                fmt("%.1e", worst_step) + ", " + fmt("%.3f s", secs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ppgbp acceptance criteria"};
  int only = 0;
  std::string work = (fs::temp_directory_path() / "ppgbp_acceptance").string();
  app.add_option("--criterion", only, "Run a single criterion (1-10); all when omitted")->check(CLI::Range(0, 10));
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria{
      {"table 1 identity", table_identity},
      {"gradient oracle", gradient_oracle},
      {"filter oracle", filter_oracle},
      {"chance floor", chance_floor},
      {"scheme ordering", scheme_ordering},
      {"personalization gain", personalization_gain},
      {"split hygiene", split_hygiene},
      {"confusion contracts", confusion_contracts},
      {"determinism", determinism},
      {"softmax and adam closed forms", closed_forms},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
