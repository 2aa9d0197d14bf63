#include "ppgbp/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <thread>

#include "ppgbp/common/bytes.hpp"
#include "ppgbp/common/error.hpp"
#include "ppgbp/data/dataset.hpp"
#include "ppgbp/data/preprocess.hpp"
#include "ppgbp/data/store.hpp"
#include "ppgbp/eval/metrics.hpp"
#include "ppgbp/eval/report.hpp"
#include "ppgbp/nn/checkpoint.hpp"
#include "ppgbp/synth/generator.hpp"
#include "ppgbp/train/trainer.hpp"

namespace ppgbp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw ConfigError(what + ": '" + s + "' is not a number");
  return v;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& what) {
  const auto parts = split_on(text, ':');
  if (parts.size() != expected)
    throw ConfigError(what + ": expected " + std::to_string(expected) + " ':'-separated values, got '" + text + "'");
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(parse_double(p, what));
  return out;
}

std::uint64_t env_seed() {
  const char* env = std::getenv("PPGBP_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(env, &pos);
    if (pos == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("PPGBP_SEED is not an unsigned integer: '") + env + "'");
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension, bool recursive) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  auto visit = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == extension) out.push_back(e.path());
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) visit(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) visit(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  // synth
  std::size_t subjects = 20;
  std::string scheme = "hph";
  double duration = 0.0;
  std::size_t target_windows = 50;
  double noise = synth::kDefaultNoiseLevel;
  // shared paths
  std::string in, out, dataset, checkpoint, runs, report;
  // preprocess
  double fs = dsp::kDefaultFs;
  double snr_min = -7.0;
  std::string sbp_range = "80:180";
  std::string hr_range = "50:140";
  double window = dsp::kWindowSeconds;
  double overlap = dsp::kOverlapSeconds;
  int filter_order = 4;
  std::string band = "0.5:8";
  // build-dataset
  std::size_t quota = 1000;
  std::size_t min_windows = 1000;
  std::string split = "0.70:0.225:0.075";
  // train
  std::string arch = "resnet18";
  std::string task = "classification";
  std::string profile = "full";
  double lr = 0.001;
  std::size_t batch_size = 128;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  // personalize
  std::size_t n_personal = 10;
  std::size_t take_every = 10;
  std::size_t epochs = 100;
  std::string optimizer_state = "resume";
  // evaluate
  std::string eval_split = "test";
  std::string run_id;
};

/// Flat JSON of every option of `sub` (except help/config) with its effective value.
std::string resolved_config(CLI::App* sub) {
  ordered_json j;
  j["command"] = sub->get_name();
  ordered_json values = ordered_json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    values[name] = opt->count() ? opt->results().back() : opt->get_default_str();
  }
  j["options"] = values;
  return j.dump(2) + "\n";
}

void echo_config(CLI::App* sub, const fs::path& path) { write_text_file(path, resolved_config(sub)); }

data::PreprocessConfig preprocess_config(const Options& o) {
  data::PreprocessConfig c;
  const auto band = parse_list(o.band, 2, "--band");
  c.filter.order = o.filter_order;
  c.filter.f_low = band[0];
  c.filter.f_high = band[1];
  c.filter.fs = o.fs;
  c.window_s = o.window;
  c.overlap_s = o.overlap;
  const auto sbp = parse_list(o.sbp_range, 2, "--sbp-range");
  const auto hr = parse_list(o.hr_range, 2, "--hr-range");
  c.thresholds.snr_min_db = o.snr_min;
  c.thresholds.sbp_min = sbp[0];
  c.thresholds.sbp_max = sbp[1];
  c.thresholds.hr_min = hr[0];
  c.thresholds.hr_max = hr[1];
  if (!(c.window_s > 0.0) || !(c.overlap_s >= 0.0) || c.overlap_s >= c.window_s)
    throw ConfigError("window must be positive and overlap in [0, window)");
  if (sbp[0] >= sbp[1] || hr[0] >= hr[1]) throw ConfigError("ranges must be increasing");
  return c;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag + " is required");
}

// ---- commands ----

void cmd_synth(const Options& o, CLI::App* sub, std::ostream& out) {
  require(o.out, "--out");
  const auto scheme = data::make_scheme(o.scheme);
  if (o.subjects < 5) throw ConfigError("--subjects must be >= 5");
  const double duration = o.duration > 0.0 ? o.duration : synth::corpus_duration(scheme, o.target_windows);
  const fs::path dir = o.out;
  parallel_for(o.subjects, o.jobs, [&](std::size_t i) {
    const auto id = static_cast<std::uint32_t>(i + 1);
    const auto rec = synth::generate_subject(o.seed, id, duration, scheme, o.noise);
    char name[32];
    std::snprintf(name, sizeof name, "subject_%05u.ppgr", id);
    data::write_record(rec, dir / name);
  });
  echo_config(sub, dir / "resolved_config.json");
  out << "synth: wrote " << o.subjects << " subjects of " << duration << " s to " << dir.string() << "\n";
}

void cmd_preprocess(const Options& o, CLI::App* sub, std::ostream& out) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto config = preprocess_config(o);
  const auto files = list_files(o.in, ".ppgr", false);
  if (files.empty()) throw IoError("no .ppgr records in " + o.in);

  std::vector<data::PreprocessResult> results(files.size());
  std::vector<std::uint32_t> ids(files.size());
  parallel_for(files.size(), o.jobs, [&](std::size_t i) {
    const auto rec = data::read_record(files[i]);
    if (std::abs(static_cast<double>(rec.fs) - o.fs) > 1e-6)
      throw FormatError(files[i].string() + ": record sampled at " + std::to_string(rec.fs) + " Hz, expected " +
                            std::to_string(o.fs),
                        0);
    ids[i] = rec.subject_id;
    results[i] = data::preprocess_record(rec, config);
  });

  std::vector<data::WindowSample> samples;
  data::QualityCounts totals;
  ordered_json per_subject = ordered_json::array();
  auto counts_json = [](const data::QualityCounts& c) {
    ordered_json j;
    j["total"] = c.total();
    for (std::size_t r = 0; r < c.by_reason.size(); ++r)
      j[std::string(dsp::to_string(static_cast<dsp::Reason>(r)))] = c.by_reason[r];
    return j;
  };
  for (std::size_t i = 0; i < results.size(); ++i) {
    samples.insert(samples.end(), results[i].samples.begin(), results[i].samples.end());
    totals += results[i].counts;
    per_subject.push_back({{"subject_id", ids[i]}, {"counts", counts_json(results[i].counts)}});
  }
  const fs::path dir = o.out;
  const auto n_samp = static_cast<std::uint32_t>(std::llround(o.window * o.fs));
  data::write_store(samples, dir / "windows.ppgw", n_samp);
  ordered_json q{{"totals", counts_json(totals)}, {"subjects", per_subject}};
  write_text_file(dir / "quality.json", q.dump(2) + "\n");
  echo_config(sub, dir / "resolved_config.json");
  out << "preprocess: " << totals.accepted() << " of " << totals.total() << " windows accepted from "
      << files.size() << " subjects\n";
}

void cmd_build_dataset(const Options& o, CLI::App* sub, std::ostream& out) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto fractions = parse_list(o.split, 3, "--split");
  const auto scheme = data::make_scheme(o.scheme);
  const fs::path in = o.in;
  const auto samples = data::read_store(fs::is_directory(in) ? in / "windows.ppgw" : in);
  data::DatasetOptions opt;
  opt.quota = o.quota;
  opt.min_windows = o.min_windows;
  opt.seed = o.seed;
  std::copy(fractions.begin(), fractions.end(), opt.fractions.begin());
  const auto ds = data::build_dataset(samples, scheme, opt);
  data::save_dataset(ds, o.out);
  echo_config(sub, fs::path(o.out) / "resolved_config.json");
  out << "build-dataset: " << ds.n_subjects() << " subjects x " << scheme.n_bins() << " bins x " << o.quota
      << " = " << ds.samples.size() << " samples (train " << ds.subjects_of(data::Split::train).size() << ", val "
      << ds.subjects_of(data::Split::val).size() << ", test " << ds.subjects_of(data::Split::test).size()
      << " subjects)\n";
}

void cmd_train(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  require(o.dataset, "--dataset");
  require(o.out, "--out");
  train::TrainConfig c;
  c.task = nn::task_from_string(o.task);
  c.architecture = o.arch;
  c.profile = nn::profile_from_string(o.profile);
  c.lr = o.lr;
  c.batch_size = o.batch_size;
  c.patience = o.patience;
  c.max_epochs = o.max_epochs;
  c.seed = o.seed;
  c.validate();
  const auto ds = data::load_dataset(o.dataset);
  const auto result = train::pretrain(ds, c, [&](const train::EpochRecord& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%zu train_loss=%.6f val_loss=%.6f val_acc=%.4f seconds=%.1f\n", e.epoch,
                  e.train_loss, e.val_loss, e.val_accuracy, e.seconds);
    err << buf << std::flush;
  });
  const fs::path dir = o.out;
  nn::save_checkpoint(result.checkpoint, dir / "checkpoint.ppgm");
  write_text_file(dir / "train_log.txt", result.log.to_text());
  echo_config(sub, dir / "resolved_config.json");
  out << "train: best epoch " << result.log.best_epoch << " of " << result.log.epochs.size() << ", checkpoint "
      << (dir / "checkpoint.ppgm").string() << "\n";
}

void cmd_personalize(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  require(o.checkpoint, "--checkpoint");
  require(o.dataset, "--dataset");
  require(o.out, "--out");
  const auto ckpt = nn::load_checkpoint(o.checkpoint);
  const auto ds = data::load_dataset(o.dataset);
  eval::check_compatible(ckpt, ds.scheme);
  const auto test_subjects = ds.subjects_of(data::Split::test);
  const auto chosen = train::select_personalization_subjects(test_subjects, o.n_personal, o.seed);

  train::PersonalizeConfig pc;
  pc.take_every = o.take_every;
  pc.epochs = o.epochs;
  pc.lr = o.lr;
  pc.batch_size = o.batch_size;
  pc.seed = o.seed;
  pc.resume_optimizer = o.optimizer_state == "resume";

  const fs::path dir = o.out;
  const auto arch = ckpt.arch.name;
  const auto task = nn::to_string(ckpt.arch.head.task);
  std::vector<eval::PersonalizationRecord> records;
  std::string logs;
  for (const auto id : chosen) {
    const auto samples = ds.samples_of_subject(id);
    const auto r = train::personalize(ckpt, samples, ds.scheme, pc);

    std::vector<data::WindowSample> others;
    for (const auto& s : ds.samples_of(data::Split::test))
      if (s.subject_id != id) others.push_back(s);
    double retention = std::numeric_limits<double>::quiet_NaN();
    if (!others.empty()) retention = eval::evaluate(r.checkpoint, others, ds.scheme, "test").accuracy;

    records.push_back({ds.scheme.name, arch, task, id, r.pre_accuracy, r.post_accuracy, retention});
    char name[40];
    std::snprintf(name, sizeof name, "subject_%05u.ppgm", id);
    nn::save_checkpoint(r.checkpoint, dir / name);
    logs += "# subject=" + std::to_string(id) + "\n" + r.log.to_text();
    err << "personalize: subject " << id << " pre=" << eval::format_double(r.pre_accuracy, 4)
        << " post=" << eval::format_double(r.post_accuracy, 4) << " best_epoch=" << r.log.best_epoch << "\n"
        << std::flush;
  }
  write_text_file(dir / "personalization.csv", eval::personalization_csv(records));
  write_text_file(dir / "personalize_log.txt", logs);
  echo_config(sub, dir / "resolved_config.json");
  std::size_t improved = 0;
  for (const auto& r : records) improved += r.post_accuracy >= r.pre_accuracy;
  out << "personalize: " << improved << " of " << records.size() << " subjects at or above pre-personalization accuracy\n";
}

void cmd_evaluate(const Options& o, CLI::App* sub, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  require(o.dataset, "--dataset");
  require(o.report, "--report");
  const auto ckpt = nn::load_checkpoint(o.checkpoint);
  const auto ds = data::load_dataset(o.dataset);
  const auto split = data::split_from_string(o.eval_split);
  const auto samples = ds.samples_of(split);
  const std::string run_id =
      o.run_id.empty() ? fs::path(o.checkpoint).parent_path().filename().string() : o.run_id;
  const auto r = eval::evaluate(ckpt, samples, ds.scheme, o.eval_split, run_id);
  const fs::path report = o.report;
  const std::vector<eval::GridRow> rows{eval::to_grid_row(r)};
  write_text_file(report, eval::grid_csv(rows));
  write_text_file(sibling(report, "_confusion.csv"), eval::confusion_csv(r));
  echo_config(sub, sibling(report, ".config.json"));
  out << "evaluate: " << r.split << " accuracy " << eval::format_double(r.accuracy, 4) << " on " << r.n_samples
      << " samples (chance " << eval::format_double(1.0 / static_cast<double>(ds.scheme.n_bins()), 4) << ")\n";
}

void cmd_report(const Options& o, CLI::App* sub, std::ostream& out) {
  require(o.runs, "--runs");
  require(o.out, "--out");
  const fs::path target = fs::weakly_canonical(o.out);
  std::vector<eval::GridRow> rows;
  std::vector<eval::PersonalizationRecord> records;
  for (const auto& path : list_files(o.runs, ".csv", true)) {
    if (fs::weakly_canonical(path) == target) continue;
    const auto text = read_text_file(path);
    const auto header = text.substr(0, text.find('\n'));
    if (header == eval::kGridHeader) {
      const auto got = eval::parse_grid_csv(text);
      rows.insert(rows.end(), got.begin(), got.end());
    } else if (header == eval::kPersonalizationHeader) {
      const auto got = eval::parse_personalization_csv(text);
      records.insert(records.end(), got.begin(), got.end());
    }
  }
  const auto tables = eval::aggregate_report(rows, records);
  const fs::path summary = o.out;
  write_text_file(summary, eval::grid_csv(tables.grid));
  write_text_file(sibling(summary, "_personalization.csv"), eval::personalization_summary_csv(tables.personalization));
  write_text_file(sibling(summary, "_architecture_average.csv"),
                  eval::architecture_average_csv(tables.architecture_averages));
  write_text_file(sibling(summary, ".json"), eval::summary_json(tables));
  write_text_file(sibling(summary, "_plots.json"), eval::plot_spec_json(tables));
  echo_config(sub, sibling(summary, ".config.json"));
  out << "report: " << tables.grid.size() << " grid rows, " << tables.personalization.size()
      << " personalization groups -> " << summary.string() << "\n";
}

/// Returns "--key=value" tokens for the config file's entries. Unknown keys are errors.
std::vector<std::string> config_tokens(const std::string& path, CLI::App* sub) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (j.contains("options") && j.contains("command") && j.size() == 2) {
    if (j["command"] != sub->get_name())
      throw ConfigError("config " + path + " was resolved for command '" + j["command"].get<std::string>() + "'");
    j = j["options"];
  }
  if (!j.is_object()) throw ConfigError("config " + path + ": expected a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    const auto* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help")
      throw ConfigError("config " + path + ": unknown key '" + key + "' for command " + sub->get_name());
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw ConfigError("config " + path + ": key '" + key + "' must be a string or number");
    }
    tokens.push_back("--" + key + "=" + text);
  }
  return tokens;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"PPG blood-pressure range classification pipeline", "ppgbp"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto common = [&](CLI::App* s, bool seeded) {
    s->add_option("--config", o.config, "JSON file with option values; flags override it");
    if (seeded) s->add_option("--seed", o.seed, "Seed (falls back to PPGBP_SEED)");
  };

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic PPG/ABP corpus");
  common(synth_cmd, true);
  synth_cmd->add_option("--subjects", o.subjects, "Number of subjects (>= 5)");
  synth_cmd->add_option("--scheme", o.scheme, "Scheme whose bins the trajectories cover");
  synth_cmd->add_option("--duration", o.duration, "Seconds per subject (0 derives it from --target-windows)");
  synth_cmd->add_option("--target-windows", o.target_windows, "Expected valid windows per bin");
  synth_cmd->add_option("--noise", o.noise, "White noise std relative to the PPG std");
  synth_cmd->add_option("--out", o.out, "Output directory");
  synth_cmd->add_option("--jobs", o.jobs, "Worker threads");

  auto* pre_cmd = app.add_subcommand("preprocess", "Filter, window, gate and label raw records");
  common(pre_cmd, false);
  pre_cmd->add_option("--in", o.in, "Directory of .ppgr records");
  pre_cmd->add_option("--out", o.out, "Output directory");
  pre_cmd->add_option("--fs", o.fs, "Expected sampling rate (Hz)");
  pre_cmd->add_option("--snr-min", o.snr_min, "Minimum SNR (dB)");
  pre_cmd->add_option("--sbp-range", o.sbp_range, "Accepted SBP range lo:hi (mmHg)");
  pre_cmd->add_option("--hr-range", o.hr_range, "Accepted heart-rate range lo:hi (bpm)");
  pre_cmd->add_option("--window", o.window, "Window length (s)");
  pre_cmd->add_option("--overlap", o.overlap, "Window overlap (s)");
  pre_cmd->add_option("--filter-order", o.filter_order, "Butterworth prototype order");
  pre_cmd->add_option("--band", o.band, "Bandpass edges lo:hi (Hz)");
  pre_cmd->add_option("--jobs", o.jobs, "Worker threads");

  auto* build_cmd = app.add_subcommand("build-dataset", "Balance windows and split subjects");
  common(build_cmd, true);
  build_cmd->add_option("--in", o.in, "preprocess output directory or .ppgw store");
  build_cmd->add_option("--scheme", o.scheme, "hph, even4, dgk or even10");
  build_cmd->add_option("--quota", o.quota, "Windows per subject and bin");
  build_cmd->add_option("--min-windows", o.min_windows, "Minimum valid windows per subject");
  build_cmd->add_option("--split", o.split, "train:val:test subject fractions");
  build_cmd->add_option("--out", o.out, "Dataset directory");

  auto* train_cmd = app.add_subcommand("train", "Pretrain a model with early stopping");
  common(train_cmd, true);
  train_cmd->add_option("--dataset", o.dataset, "Dataset directory");
  train_cmd->add_option("--arch", o.arch, "alexnet, resnet18, resnet34 or resnet50");
  train_cmd->add_option("--task", o.task, "classification or regression");
  train_cmd->add_option("--profile", o.profile, "full or desk");
  train_cmd->add_option("--lr", o.lr, "Adam learning rate");
  train_cmd->add_option("--batch-size", o.batch_size, "Batch size");
  train_cmd->add_option("--patience", o.patience, "Early-stopping patience (epochs)");
  train_cmd->add_option("--max-epochs", o.max_epochs, "Epoch cap");
  train_cmd->add_option("--out", o.out, "Run directory");

  auto* pers_cmd = app.add_subcommand("personalize", "Fine-tune a pretrained model per test subject");
  common(pers_cmd, true);
  pers_cmd->add_option("--checkpoint", o.checkpoint, "Pretrained checkpoint");
  pers_cmd->add_option("--dataset", o.dataset, "Dataset directory");
  pers_cmd->add_option("--subjects", o.n_personal, "Number of test subjects to personalize");
  pers_cmd->add_option("--take-every", o.take_every, "Every n-th SBP-sorted window is used for fine-tuning");
  pers_cmd->add_option("--epochs", o.epochs, "Fine-tuning epochs");
  pers_cmd->add_option("--lr", o.lr, "Adam learning rate");
  pers_cmd->add_option("--batch-size", o.batch_size, "Batch size (capped at the fine-tuning set size)");
  pers_cmd->add_option("--optimizer-state", o.optimizer_state, "resume the pretrained Adam moments or start fresh")
      ->check(CLI::IsMember({"resume", "fresh"}));
  pers_cmd->add_option("--out", o.out, "Output directory");

  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy and confusion matrix on a split");
  common(eval_cmd, false);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--dataset", o.dataset, "Dataset directory");
  eval_cmd->add_option("--split", o.eval_split, "train, val or test");
  eval_cmd->add_option("--report", o.report, "Output CSV");
  eval_cmd->add_option("--run-id", o.run_id, "Run name (defaults to the checkpoint directory name)");

  auto* report_cmd = app.add_subcommand("report", "Aggregate evaluation and personalization CSVs");
  common(report_cmd, false);
  report_cmd->add_option("--runs", o.runs, "Directory searched recursively for CSV outputs");
  report_cmd->add_option("--out", o.out, "Summary CSV");

  try {
    o.seed = env_seed();
    for (auto* s : app.get_subcommands({})) {
      if (auto* opt = s->get_option_no_throw("--seed")) opt->default_str(std::to_string(o.seed));
    }

    // Config values go right after the subcommand name so later flags override them.
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty() && !args.empty()) {
      CLI::App* sub = nullptr;
      for (auto* s : app.get_subcommands({}))
        if (s->get_name() == args[0]) sub = s;
      if (sub == nullptr) throw ConfigError("--config must follow a subcommand");
      const auto tokens = config_tokens(config_path, sub);
      args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    }

    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : static_cast<int>(ErrorKind::configuration);
    }

    if (synth_cmd->parsed()) cmd_synth(o, synth_cmd, out);
    if (pre_cmd->parsed()) cmd_preprocess(o, pre_cmd, out);
    if (build_cmd->parsed()) cmd_build_dataset(o, build_cmd, out);
    if (train_cmd->parsed()) cmd_train(o, train_cmd, out, err);
    if (pers_cmd->parsed()) cmd_personalize(o, pers_cmd, out, err);
    if (eval_cmd->parsed()) cmd_evaluate(o, eval_cmd, out);
    if (report_cmd->parsed()) cmd_report(o, report_cmd, out);
    return 0;
  } catch (const Error& e) {
    static const std::map<ErrorKind, const char*> label{{ErrorKind::configuration, "configuration error"},
                                                        {ErrorKind::data_format, "data format error"},
                                                        {ErrorKind::divergence, "divergence"},
                                                        {ErrorKind::io, "I/O error"}};
    err << "error: " << label.at(e.kind()) << ": " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: I/O error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    err << "error: configuration error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::configuration);
  }
}

}  // namespace ppgbp::cli
