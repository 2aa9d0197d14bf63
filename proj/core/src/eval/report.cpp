#include "ppgbp/eval/report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ppgbp/common/error.hpp"

namespace ppgbp::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

GridRow to_grid_row(const EvalReport& r) {
  return {r.scheme, r.architecture, r.task, r.split, r.n_samples, r.accuracy, r.mean_abs_bin_distance,
          r.confusion.n_bins};
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double s = 0.0;
  for (double v : values) s += v;
  out.mean = s / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

SummaryTables aggregate_report(std::span<const GridRow> rows, std::span<const PersonalizationRecord> records) {
  if (rows.empty() && records.empty()) throw ConfigError("report: no runs to aggregate");

  std::map<std::string, std::size_t> bins_of_scheme;
  for (const auto& r : rows) {
    if (r.n_bins == 0) continue;
    auto [it, inserted] = bins_of_scheme.emplace(r.scheme, r.n_bins);
    if (!inserted && it->second != r.n_bins)
      throw ConfigError("report: scheme " + r.scheme + " appears with " + std::to_string(it->second) +
                        " and " + std::to_string(r.n_bins) + " bins");
  }

  SummaryTables out;
  using Key4 = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key4, std::vector<const GridRow*>> cells;
  for (const auto& r : rows) cells[{r.scheme, r.architecture, r.task, r.split}].push_back(&r);
  for (const auto& [key, group] : cells) {
    GridRow g = *group.front();
    double acc = 0.0, dist = 0.0;
    std::size_t n = 0;
    for (const auto* r : group) {
      acc += r->accuracy * static_cast<double>(r->n);
      dist += r->mean_abs_bin_distance * static_cast<double>(r->n);
      n += r->n;
    }
    g.n = n;
    g.accuracy = n ? acc / static_cast<double>(n) : 0.0;
    g.mean_abs_bin_distance = n ? dist / static_cast<double>(n) : 0.0;
    out.grid.push_back(g);
  }

  using Key3 = std::tuple<std::string, std::string, std::string>;
  std::map<Key3, std::pair<std::vector<double>, std::vector<double>>> per;
  for (const auto& r : records) {
    auto& [pre, post] = per[{r.scheme, r.architecture, r.task}];
    pre.push_back(r.pre_accuracy);
    post.push_back(r.post_accuracy);
  }
  for (const auto& [key, vals] : per)
    out.personalization.push_back(
        {std::get<0>(key), std::get<1>(key), std::get<2>(key), mean_std(vals.first), mean_std(vals.second)});

  // cross-architecture averages: grid accuracies and per-architecture personalization means
  std::map<Key3, std::vector<double>> acc_by;
  for (const auto& g : out.grid) acc_by[{g.scheme, g.task, g.split}].push_back(g.accuracy);
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> pp_by;
  for (const auto& p : out.personalization) {
    auto& [pre, post] = pp_by[{p.scheme, p.task}];
    pre.push_back(p.pre.mean);
    post.push_back(p.post.mean);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [key, accs] : acc_by) {
    ArchitectureAverage a{std::get<0>(key), std::get<1>(key), std::get<2>(key), mean_std(accs), {}, {}};
    if (auto it = pp_by.find({a.scheme, a.task}); it != pp_by.end()) {
      a.pre = mean_std(it->second.first);
      a.post = mean_std(it->second.second);
    }
    seen.insert({a.scheme, a.task});
    out.architecture_averages.push_back(a);
  }
  for (const auto& [key, vals] : pp_by) {
    if (seen.count(key)) continue;
    out.architecture_averages.push_back({key.first, key.second, "personalization", {}, mean_std(vals.first),
                                         mean_std(vals.second)});
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != header) throw FormatError("csv: unexpected header '" + line + "'", 0);
      have_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (!have_header) throw FormatError("csv: missing header", 0);
  return rows;
}

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw FormatError("csv: bad number '" + s + "'", 0);
  }
}

}  // namespace

std::string grid_csv(std::span<const GridRow> rows) {
  std::string out = std::string(kGridHeader) + "\n";
  for (const auto& r : rows)
    out += r.scheme + "," + r.architecture + "," + r.task + "," + r.split + "," + std::to_string(r.n) + "," +
           format_double(r.accuracy) + "," + format_double(r.mean_abs_bin_distance) + "\n";
  return out;
}

std::vector<GridRow> parse_grid_csv(const std::string& text) {
  std::vector<GridRow> out;
  for (const auto& c : parse_csv(text, kGridHeader)) {
    if (c.size() != 7) throw FormatError("grid csv: expected 7 columns", 0);
    out.push_back({c[0], c[1], c[2], c[3], static_cast<std::size_t>(parse_number(c[4])), parse_number(c[5]),
                   parse_number(c[6]), 0});
  }
  return out;
}

std::string personalization_csv(std::span<const PersonalizationRecord> records) {
  std::string out = std::string(kPersonalizationHeader) + "\n";
  for (const auto& r : records)
    out += r.scheme + "," + r.architecture + "," + r.task + "," + std::to_string(r.subject_id) + "," +
           format_double(r.pre_accuracy) + "," + format_double(r.post_accuracy) + "," +
           format_double(r.retention_accuracy) + "\n";
  return out;
}

std::vector<PersonalizationRecord> parse_personalization_csv(const std::string& text) {
  std::vector<PersonalizationRecord> out;
  for (const auto& c : parse_csv(text, kPersonalizationHeader)) {
    if (c.size() != 7) throw FormatError("personalization csv: expected 7 columns", 0);
    out.push_back({c[0], c[1], c[2], static_cast<std::uint32_t>(parse_number(c[3])), parse_number(c[4]),
                   parse_number(c[5]), parse_number(c[6])});
  }
  return out;
}

std::string confusion_csv(const EvalReport& r) {
  const auto& cm = r.confusion;
  std::string out;
  auto block = [&](const char* kind, auto cell) {
    out += "# run=" + (r.run_id.empty() ? r.architecture + "_" + r.scheme + "_" + r.task : r.run_id) +
           " split=" + r.split + " kind=" + kind + " rows=ground_truth cols=predicted last_col=empty_row\n";
    for (std::size_t t = 0; t < cm.n_bins; ++t) {
      for (std::size_t p = 0; p < cm.n_bins; ++p) out += cell(t, p) + ",";
      out += cm.empty_row[t] ? "1\n" : "0\n";
    }
  };
  block("normalized", [&](std::size_t t, std::size_t p) { return format_double(cm.normalized[t][p]); });
  block("raw", [&](std::size_t t, std::size_t p) { return std::to_string(cm.raw[t][p]); });
  return out;
}

std::string personalization_summary_csv(std::span<const PersonalizationSummary> rows) {
  std::string out = "scheme,architecture,task,n_subjects,pre_mean,pre_std,post_mean,post_std\n";
  for (const auto& r : rows)
    out += r.scheme + "," + r.architecture + "," + r.task + "," + std::to_string(r.pre.n) + "," +
           format_double(r.pre.mean) + "," + format_double(r.pre.std) + "," + format_double(r.post.mean) + "," +
           format_double(r.post.std) + "\n";
  return out;
}

std::string architecture_average_csv(std::span<const ArchitectureAverage> rows) {
  std::string out =
      "scheme,task,split,n_architectures,accuracy_mean,accuracy_std,pre_mean,pre_std,post_mean,post_std\n";
  for (const auto& r : rows)
    out += r.scheme + "," + r.task + "," + r.split + "," + std::to_string(r.accuracy.n) + "," +
           format_double(r.accuracy.mean) + "," + format_double(r.accuracy.std) + "," +
           (r.pre.n ? format_double(r.pre.mean) : "nan") + "," + (r.pre.n ? format_double(r.pre.std) : "nan") +
           "," + (r.post.n ? format_double(r.post.mean) : "nan") + "," +
           (r.post.n ? format_double(r.post.std) : "nan") + "\n";
  return out;
}

double reference_accuracy(const std::string& scheme, const std::string& architecture, const std::string& task) {
  static const std::map<std::tuple<std::string, std::string>, std::array<double, 4>> table{
      {{"hph", "classification"}, {0.45, 0.44, 0.45, 0.44}},
      {{"even4", "classification"}, {0.36, 0.36, 0.37, 0.36}},
      {{"dgk", "classification"}, {0.24, 0.24, 0.25, 0.23}},
      {{"even10", "classification"}, {0.16, 0.15, 0.16, 0.16}},
      {{"hph", "regression"}, {0.42, 0.46, 0.45, 0.45}},
      {{"even4", "regression"}, {0.36, 0.36, 0.37, 0.38}},
      {{"dgk", "regression"}, {0.25, 0.25, 0.25, 0.25}},
      {{"even10", "regression"}, {0.14, 0.16, 0.16, 0.16}},
  };
  static const std::map<std::string, std::size_t> column{{"alexnet", 0}, {"resnet18", 1}, {"resnet34", 2}, {"resnet50", 3}};
  const auto row = table.find({scheme, task});
  const auto col = column.find(architecture);
  if (row == table.end() || col == column.end()) return std::numeric_limits<double>::quiet_NaN();
  return row->second[col->second];
}

std::string summary_json(const SummaryTables& t) {
  ordered_json j;
  j["grid"] = ordered_json::array();
  for (const auto& g : t.grid) {
    ordered_json row{{"scheme", g.scheme}, {"architecture", g.architecture}, {"task", g.task},
                     {"split", g.split},   {"n", g.n},                       {"accuracy", g.accuracy},
                     {"mean_abs_bin_distance", g.mean_abs_bin_distance}};
    const double ref = reference_accuracy(g.scheme, g.architecture, g.task);
    row["published_reference_accuracy"] = std::isnan(ref) ? ordered_json(nullptr) : ordered_json(ref);
    j["grid"].push_back(row);
  }
  j["personalization"] = ordered_json::array();
  for (const auto& p : t.personalization)
    j["personalization"].push_back({{"scheme", p.scheme}, {"architecture", p.architecture}, {"task", p.task},
                                    {"n_subjects", p.pre.n}, {"pre_mean", p.pre.mean}, {"pre_std", p.pre.std},
                                    {"post_mean", p.post.mean}, {"post_std", p.post.std}});
  j["architecture_averages"] = ordered_json::array();
  for (const auto& a : t.architecture_averages)
    j["architecture_averages"].push_back({{"scheme", a.scheme}, {"task", a.task}, {"split", a.split},
                                          {"n_architectures", a.accuracy.n}, {"accuracy_mean", a.accuracy.mean},
                                          {"pre_mean", a.pre.mean}, {"post_mean", a.post.mean}});
  j["footnotes"] = {
      "published_reference_accuracy is the test accuracy reported for models trained on MIMIC-III; "
      "it is shown for orientation only and is not expected to match synthetic-data runs.",
      "Confusion matrices use rows = ground truth bin, columns = predicted bin."};
  return j.dump(2) + "\n";
}

std::string plot_spec_json(const SummaryTables& t) {
  ordered_json j;
  j["format"] = "ppgbp-plot-spec";
  j["version"] = 1;
  ordered_json grid{{"title", "Test accuracy by segmentation and architecture"},
                    {"type", "grouped_bar"},
                    {"x", "scheme"},
                    {"group", "architecture"},
                    {"facet", "task"},
                    {"y", "accuracy"},
                    {"data", ordered_json::array()}};
  for (const auto& g : t.grid)
    if (g.split == "test")
      grid["data"].push_back(
          {{"scheme", g.scheme}, {"architecture", g.architecture}, {"task", g.task}, {"accuracy", g.accuracy}});
  ordered_json pers{{"title", "Accuracy before and after personalization"},
                    {"type", "grouped_bar_with_error"},
                    {"x", "scheme"},
                    {"group", "phase"},
                    {"facet", "task"},
                    {"y", "accuracy_mean"},
                    {"error", "accuracy_std"},
                    {"data", ordered_json::array()}};
  for (const auto& p : t.personalization) {
    pers["data"].push_back({{"scheme", p.scheme}, {"architecture", p.architecture}, {"task", p.task},
                            {"phase", "pre"}, {"accuracy_mean", p.pre.mean}, {"accuracy_std", p.pre.std}});
    pers["data"].push_back({{"scheme", p.scheme}, {"architecture", p.architecture}, {"task", p.task},
                            {"phase", "post"}, {"accuracy_mean", p.post.mean}, {"accuracy_std", p.post.std}});
  }
  j["plots"] = ordered_json::array({grid, pers});
  return j.dump(2) + "\n";
}

}  // namespace ppgbp::eval
