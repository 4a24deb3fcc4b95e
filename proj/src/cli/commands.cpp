#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcbls/cli.hpp"
#include "pcbls/corruption.hpp"
#include "pcbls/errors.hpp"
#include "pcbls/evaluation.hpp"
#include "pcbls/metrics.hpp"
#include "pcbls/persistence.hpp"
#include "pcbls/rng.hpp"

namespace pcbls::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
  std::vector<std::string> overrides;
};

struct CommandFlags {
  std::string data;
  std::string bank;
  std::string pixel_bank;
  std::string checkpoint;
  std::string variant = "plain";
  std::string manifest;
  std::vector<std::string> kinds;
  std::vector<int> severities{1, 2, 3, 4, 5};
  std::vector<std::string> run_dirs;
};

std::string fmt(double v, const char* pattern = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

RunConfig resolve(const GlobalFlags& g, const CommandFlags& c) {
  json file;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw ConfigError("config file not found: " + g.config_path);
    try {
      file = json::parse(read_text(g.config_path));
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + g.config_path + " is not valid JSON: " + e.what());
    }
  }
  RunConfig config =
      resolve_config(g.preset.empty() ? std::nullopt : std::optional<std::string>(g.preset), file, g.overrides, g.seed);
  if (!c.data.empty()) config.data = c.data;
  if (!c.bank.empty()) config.bank = c.bank;
  if (!c.pixel_bank.empty()) config.pixel_bank = c.pixel_bank;
  config.train.threads = worker_threads();
  return config;
}

std::pair<LabeledDataset, LabeledDataset> data_for(const RunConfig& config) {
  auto sets = load_data(config.data, config.train.seed);
  if (sets.first.task != config.train.task) {
    throw ConfigError("data '" + config.data + "' is a " + std::string(to_string(sets.first.task)) +
                      " set but the config task is " + std::string(to_string(config.train.task)));
  }
  return sets;
}

Model checkpoint_model(const std::string& path) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path);
  return load_checkpoint(path).model;
}

fs::path output_dir(const GlobalFlags& g, const fs::path& fallback) {
  const fs::path dir = g.out.empty() ? fallback : fs::path(g.out);
  fs::create_directories(dir);
  return dir;
}

double fit_validation_temperature(const Model& model, const LabeledDataset& val) {
  switch (val.task) {
  case TaskKind::multiclass: {
    const auto logits = predict_logits(model, val);
    return fit_temperature(logits, val.labels).temperature;
  }
  case TaskKind::segmentation: {
    const auto [logits, labels] = pixel_logits(model, val);
    return fit_temperature(logits, labels).temperature;
  }
  case TaskKind::multilabel:
    break;
  }
  throw ConfigError("temperature scaling needs a softmax task (multiclass or segmentation)");
}

struct BankFiles {
  fs::path bank;
  fs::path pixel_bank;
  double temperature = 1.0;
};

// Scores the training set with a frozen model and writes bank.csv (+ pixel_bank/ for segmentation).
BankFiles write_banks(const Model& model, const LabeledDataset& train_set, const LabeledDataset& val_set,
                      BankSource variant, const fs::path& dir) {
  BankFiles files;
  check_compatible(model, train_set);
  if (variant == BankSource::temperature_scaled) files.temperature = fit_validation_temperature(model, val_set);
  fs::create_directories(dir);
  files.bank = dir / "bank.csv";
  save_bank(files.bank, score_samples(model, train_set, variant, files.temperature));
  if (train_set.task == TaskKind::segmentation) {
    files.pixel_bank = dir / "pixel_bank";
    save_pixel_bank(files.pixel_bank, score_pixels(model, train_set, files.temperature));
  }
  const json meta{{"variant", std::string(to_string(variant))},
                  {"temperature", files.temperature},
                  {"samples", train_set.size()}};
  write_file_atomic(dir / "bank.json", meta.dump(2) + "\n");
  return files;
}

void print_epoch(std::ostream& out, const EpochRecord& r, std::size_t epochs) {
  out << "epoch " << r.epoch + 1 << "/" << epochs << " active=" << r.active_count << " eps=" << fmt(r.eps, "%.4f");
  if (r.sigma > 0.0) out << " sigma=" << fmt(r.sigma, "%.4f");
  out << " loss=" << fmt(r.train_loss, "%.4f");
  for (const auto& [name, value] : r.metrics) out << " " << name << "=" << fmt(value, "%.4f");
  out << "\n";
}

int cmd_train(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  RunConfig config = resolve(g, c);
  const auto [train_set, val_set] = data_for(config);
  const fs::path dir = output_dir(g, fs::path("runs") / (config.preset + "_s" + std::to_string(config.train.seed)));

  PacingBanks banks;
  if (config.train.pace) {
    const bool pixel = config.train.granularity == Granularity::pixel;
    std::optional<std::string>& path = pixel ? config.pixel_bank : config.bank;
    if (!path) {
      // No bank given: train the baseline the bank variant calls for and score with it.
      TrainConfig base = config.train;
      base.uls_schedule.reset();
      base.svls_schedule.reset();
      base.pace.reset();
      if (config.bank_variant == BankSource::label_smoothed) base.uls_schedule = SmoothingSchedule::constant(0.1);
      out << "building " << to_string(config.bank_variant) << " bank from a baseline run\n";
      const TrainResult baseline = train(base, train_set, val_set);
      const fs::path bank_dir = dir / "bank";
      fs::create_directories(bank_dir);
      save_checkpoint(bank_dir / "model.ckpt", Checkpoint{baseline.model, base.epochs});
      write_file_atomic(bank_dir / "metrics.csv", metrics_csv(baseline.records));
      const BankFiles files = write_banks(baseline.model, train_set, val_set, config.bank_variant, bank_dir);
      path = (pixel ? files.pixel_bank : files.bank).string();
    } else if (!fs::exists(*path)) {
      throw ConfigError(std::string(pixel ? "pixel bank" : "bank") + " not found: " + *path);
    }
    if (pixel) {
      banks.pixels = load_pixel_bank(*path);
    } else {
      banks.samples = load_bank(*path);
    }
  }

  write_file_atomic(dir / "config.json", to_json(config).dump(2) + "\n");
  const TrainResult result = train(config.train, train_set, val_set, banks);
  for (const auto& r : result.records) print_epoch(out, r, config.train.epochs);
  write_file_atomic(dir / "metrics.csv", metrics_csv(result.records));
  save_checkpoint(dir / "model.ckpt", Checkpoint{result.model, config.train.epochs});
  out << "wrote " << (dir / "model.ckpt").string() << ", " << (dir / "metrics.csv").string() << ", "
      << (dir / "config.json").string() << "\n";
  return kExitOk;
}

int cmd_bank(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  const RunConfig config = resolve(g, c);
  const BankSource variant = [&] {
    try {
      return bank_source_from_string(c.variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  const Model model = checkpoint_model(c.checkpoint);
  const auto [train_set, val_set] = data_for(config);
  const fs::path dir = output_dir(g, fs::path(c.checkpoint).parent_path() / ("bank_" + std::string(to_string(variant))));
  const BankFiles files = write_banks(model, train_set, val_set, variant, dir);
  out << "wrote " << files.bank.string() << " (" << train_set.size() << " samples, T=" << fmt(files.temperature)
      << ")\n";
  if (!files.pixel_bank.empty()) out << "wrote " << files.pixel_bank.string() << "\n";
  return kExitOk;
}

std::vector<CorruptionKind> parse_kinds(const std::vector<std::string>& names) {
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    const auto all = all_corruption_kinds();
    return {all.begin(), all.end()};
  }
  std::vector<CorruptionKind> kinds;
  for (const auto& name : names) {
    try {
      kinds.push_back(corruption_kind_from_string(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return kinds;
}

int cmd_corrupt(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  const RunConfig config = resolve(g, c);
  if (g.out.empty()) throw ConfigError("corrupt needs --out <dir>");
  const auto kinds = parse_kinds(c.kinds);
  for (int s : c.severities) {
    if (s < 1 || s > kSeverityLevels) throw ConfigError("severity must be in 1..5, got " + std::to_string(s));
  }
  const auto sets = data_for(config);
  const fs::path dir = output_dir(g, {});
  const auto rows = corrupt_dataset(sets.second, kinds, c.severities, named_seed(config.train.seed, "corruption"), dir);
  out << "wrote " << rows.size() << " images and " << (dir / "manifest.csv").string() << "\n";
  return kExitOk;
}

void emit(const GlobalFlags& g, const std::string& name, const std::string& text, std::ostream& out) {
  out << text;
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    write_file_atomic(fs::path(g.out) / name, text);
  }
}

int cmd_eval(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  const RunConfig config = resolve(g, c);
  const Model model = checkpoint_model(c.checkpoint);
  const auto sets = data_for(config);
  const LabeledDataset& val = sets.second;
  check_compatible(model, val);
  if (!c.manifest.empty()) {
    if (!fs::exists(c.manifest)) throw ConfigError("manifest not found: " + c.manifest);
    const auto rows = read_manifest(c.manifest);
    const auto table = robustness_report(model, rows, fs::path(c.manifest).parent_path(), val);
    emit(g, "robustness.csv", robustness_csv(table), out);
    return kExitOk;
  }
  if (!c.kinds.empty()) {
    const auto table = robustness_report(model, val, parse_kinds(c.kinds), named_seed(config.train.seed, "corruption"));
    emit(g, "robustness.csv", robustness_csv(table), out);
    return kExitOk;
  }
  std::string text = "metric,value\n";
  for (const auto& [name, value] : evaluate(model, val, config.train.ece_bins)) {
    text += name + "," + fmt(value, "%.17g") + "\n";
  }
  emit(g, "eval.csv", text, out);
  return kExitOk;
}

int cmd_calibrate(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  const RunConfig config = resolve(g, c);
  const Model model = checkpoint_model(c.checkpoint);
  const auto sets = data_for(config);
  const LabeledDataset& val = sets.second;
  check_compatible(model, val);
  std::vector<std::vector<double>> logits;
  std::vector<int> labels;
  if (val.task == TaskKind::multiclass) {
    logits = predict_logits(model, val);
    labels = val.labels;
  } else if (val.task == TaskKind::segmentation) {
    std::tie(logits, labels) = pixel_logits(model, val);
  } else {
    throw ConfigError("calibrate needs a softmax task (multiclass or segmentation)");
  }
  const std::size_t bins = config.train.ece_bins;
  const TemperatureModel fitted = fit_temperature(logits, labels);
  const CalibrationReport before = calibration_report(logits, labels, 1.0, bins);
  const CalibrationReport after = calibration_report(logits, labels, fitted.temperature, bins);
  auto block = [](const CalibrationReport& r) { return json{{"ece", r.ece}, {"brier", r.brier}, {"nll", r.nll}}; };
  const json doc{{"temperature", fitted.temperature}, {"bins", bins}, {"before", block(before)}, {"after", block(after)}};
  const fs::path dir = output_dir(g, fs::path(c.checkpoint).parent_path());
  write_file_atomic(dir / "temperature.json", doc.dump(2) + "\n");
  std::string text = "stage,temperature,ece,brier,nll\n";
  text += "uncalibrated,1," + fmt(before.ece, "%.17g") + "," + fmt(before.brier, "%.17g") + "," +
          fmt(before.nll, "%.17g") + "\n";
  text += "calibrated," + fmt(fitted.temperature, "%.17g") + "," + fmt(after.ece, "%.17g") + "," +
          fmt(after.brier, "%.17g") + "," + fmt(after.nll, "%.17g") + "\n";
  write_file_atomic(dir / "calibration.csv", text);
  out << text;
  return kExitOk;
}

// Method label of a resolved run config, as in the comparison tables.
std::string method_of(const json& config) {
  const json& schedule = config.contains("schedule") ? config["schedule"] : json();
  const bool paced = config.contains("pace") && !config["pace"].is_null();
  if (schedule.is_null() || !schedule.is_object()) return paced ? "P-CE" : "baseline";
  const std::string kind = schedule.value("kind", "constant");
  if (kind == "constant") {
    if (schedule.value("init", 0.0) <= 1e-12) return paced ? "P-CE" : "baseline";
    return paced ? "P-LS" : "LS";
  }
  if (kind == "anti") return "anti-CBLS";
  if (kind == "random") return "random-CBLS";
  return paced ? "P-CBLS" : "CBLS";
}

int cmd_report(const GlobalFlags& g, const CommandFlags& c, std::ostream& out) {
  struct Row {
    std::string run;
    std::string preset = "NA";
    std::string method = "NA";
    std::map<std::string, std::string> values;
  };
  std::vector<Row> rows;
  std::set<std::string> metric_names;
  for (const auto& dir : c.run_dirs) {
    const fs::path metrics = fs::path(dir) / "metrics.csv";
    if (!fs::exists(metrics)) throw ConfigError("no metrics.csv in run directory: " + dir);
    Row row;
    row.run = fs::path(dir).lexically_normal().filename().string();
    if (row.run.empty()) row.run = fs::path(dir).lexically_normal().parent_path().filename().string();
    if (const fs::path cfg = fs::path(dir) / "config.json"; fs::exists(cfg)) {
      const json j = json::parse(read_text(cfg));
      row.preset = j.value("preset", "NA");
      row.method = method_of(j);
    }
    std::istringstream lines(read_text(metrics));
    std::string header;
    std::string line;
    std::string last;
    std::getline(lines, header);
    while (std::getline(lines, line)) {
      if (!line.empty()) last = line;
    }
    const auto names = split_csv_line(header);
    const auto values = split_csv_line(last);
    for (std::size_t i = 0; i < names.size() && i < values.size(); ++i) {
      if (names[i] == "epoch" || names[i] == "active_count" || names[i] == "eps" || names[i] == "sigma") continue;
      const std::string name = names[i] == "train_loss" ? "final_train_loss" : names[i];
      row.values[name] = fmt(std::stod(values[i]));
      metric_names.insert(name);
    }
    rows.push_back(std::move(row));
  }
  std::string text = "run,preset,method";
  for (const auto& name : metric_names) text += "," + name;
  text += "\n";
  for (const auto& row : rows) {
    text += row.run + "," + row.preset + "," + row.method;
    for (const auto& name : metric_names) {
      const auto it = row.values.find(name);
      text += "," + (it == row.values.end() ? std::string("NA") : it->second);
    }
    text += "\n";
  }
  emit(g, "report.csv", text, out);
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pcbls: curriculum label smoothing with paced learning"};
  app.name("pcbls");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  CommandFlags c;
  app.add_option("--config", g.config_path, "JSON run config");
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--preset", g.preset, "Hyper-parameter preset");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  auto* train_cmd = app.add_subcommand("train", "Train a model with the configured schedule and pacing");
  train_cmd->add_option("--data", c.data, "Data source spec");
  train_cmd->add_option("--bank", c.bank, "Sample bank CSV");
  train_cmd->add_option("--pixel-bank", c.pixel_bank, "Pixel bank directory");

  auto* bank_cmd = app.add_subcommand("bank", "Score the training set with a frozen model");
  bank_cmd->add_option("--checkpoint", c.checkpoint, "Model checkpoint")->required();
  bank_cmd->add_option("--data", c.data, "Data source spec");
  bank_cmd->add_option("--variant", c.variant, "plain, ts or ls");

  auto* corrupt_cmd = app.add_subcommand("corrupt", "Write corrupted copies of the validation split");
  corrupt_cmd->add_option("--data", c.data, "Data source spec");
  corrupt_cmd->add_option("--kinds", c.kinds, "Corruption kinds (default all)")->delimiter(',');
  corrupt_cmd->add_option("--severities", c.severities, "Severity levels")->delimiter(',');

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on clean or corrupted data");
  eval_cmd->add_option("--checkpoint", c.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", c.data, "Data source spec");
  eval_cmd->add_option("--manifest", c.manifest, "Corruption manifest.csv");
  eval_cmd->add_option("--kinds", c.kinds, "Corrupt in memory with these kinds")->delimiter(',');

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit a temperature on the validation split");
  calibrate_cmd->add_option("--checkpoint", c.checkpoint, "Model checkpoint")->required();
  calibrate_cmd->add_option("--data", c.data, "Data source spec");

  auto* report_cmd = app.add_subcommand("report", "Compare finished runs");
  report_cmd->add_option("runs", c.run_dirs, "Run directories")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(g, c, out);
    if (bank_cmd->parsed()) return cmd_bank(g, c, out);
    if (corrupt_cmd->parsed()) return cmd_corrupt(g, c, out);
    if (eval_cmd->parsed()) return cmd_eval(g, c, out);
    if (calibrate_cmd->parsed()) return cmd_calibrate(g, c, out);
    if (report_cmd->parsed()) return cmd_report(g, c, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

} // namespace pcbls::cli
