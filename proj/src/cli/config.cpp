#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <thread>

#include "pcbls/cli.hpp"
#include "pcbls/rng.hpp"

namespace pcbls::cli {

using nlohmann::json;

namespace {

json schedule_to_json(const SmoothingSchedule& s) {
  return json{{"kind", std::string(to_string(s.kind))},
              {"init", s.init},
              {"rate", s.rate},
              {"floor", s.floor},
              {"cap", s.cap},
              {"range", json::array({s.range_lo, s.range_hi})},
              {"seed", s.seed}};
}

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + " must be an object");
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown config key '" + std::string(where.empty() ? "" : std::string(where) + ".") +
                        item.key() + "'");
    }
  }
}

template <class T>
T get(const json& j, std::string_view key, std::string_view where, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    }
    return it->get<T>();
  } catch (const std::exception&) {
    const std::string name = where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
    throw ConfigError("config key '" + name + "' has the wrong type: " + it->dump());
  }
}

template <class F>
auto wrap(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

SmoothingSchedule schedule_from_json(const json& j, std::string_view where) {
  check_keys(j, where, {"kind", "init", "rate", "floor", "cap", "range", "seed"});
  SmoothingSchedule s;
  s.kind = wrap([&] { return schedule_kind_from_string(get<std::string>(j, "kind", where, "constant")); });
  s.init = get<double>(j, "init", where, s.init);
  s.rate = get<double>(j, "rate", where, s.rate);
  s.floor = get<double>(j, "floor", where, s.floor);
  s.cap = get<double>(j, "cap", where, s.cap);
  s.seed = get<std::uint64_t>(j, "seed", where, s.seed);
  if (const auto it = j.find("range"); it != j.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw ConfigError(std::string(where) + ".range must be a [lo, hi] pair");
    }
    s.range_lo = (*it)[0].get<double>();
    s.range_hi = (*it)[1].get<double>();
  }
  return s;
}

// "a.b.c" -> nested object holding value.
void set_path(json& root, std::string_view path, json value) {
  json* node = &root;
  while (true) {
    const auto dot = path.find('.');
    const std::string key(path.substr(0, dot));
    if (key.empty()) throw ConfigError("empty key in override path");
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    json& child = (*node)[key];
    if (!child.is_object()) child = json::object();
    node = &child;
    path.remove_prefix(dot + 1);
  }
}

bool has_path(const json& root, std::initializer_list<std::string_view> path) {
  const json* node = &root;
  for (auto key : path) {
    if (!node->is_object()) return false;
    const auto it = node->find(key);
    if (it == node->end()) return false;
    node = &*it;
  }
  return true;
}

json parse_override_value(const std::string& text) {
  if (text == "none") return nullptr;
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

template <class T>
T parse_number(std::string_view key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("data spec parameter '" + std::string(key) + "' is not a valid number: '" + text + "'");
  }
  return value;
}

class SpecParams {
public:
  explicit SpecParams(const DataSpec& spec) : spec_(spec) {}

  template <class T>
  T take(std::string_view key, T fallback) {
    for (const auto& [k, v] : spec_.params) {
      if (k == key) {
        used_.insert(k);
        return parse_number<T>(key, v);
      }
    }
    return fallback;
  }

  bool has(std::string_view key) const {
    return std::any_of(spec_.params.begin(), spec_.params.end(), [&](const auto& kv) { return kv.first == key; });
  }

  void finish() const {
    for (const auto& [k, v] : spec_.params) {
      if (!used_.count(k)) throw ConfigError("unknown " + spec_.kind + " data parameter '" + k + "'");
    }
  }

private:
  const DataSpec& spec_;
  std::set<std::string> used_;
};

std::size_t default_val(std::size_t n) { return std::max<std::size_t>(1, n / 6); }

} // namespace

json to_json(const RunConfig& config) {
  const TrainConfig& t = config.train;
  json j;
  j["preset"] = config.preset;
  j["seed"] = t.seed;
  j["data"] = config.data;
  j["task"] = std::string(to_string(t.task));
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["optimizer"] = {{"kind", std::string(to_string(t.optimizer.kind))},
                    {"lr", t.optimizer.lr},
                    {"momentum", t.optimizer.momentum},
                    {"weight_decay", t.optimizer.weight_decay}};
  j["lr_decay"] = t.lr_decay;
  j["lr_decay_epoch"] = t.decay_epoch();
  j["schedule"] = t.uls_schedule ? schedule_to_json(*t.uls_schedule) : json(nullptr);
  j["svls_schedule"] = t.svls_schedule ? schedule_to_json(*t.svls_schedule) : json(nullptr);
  j["svls_kernel"] = t.svls_kernel;
  j["pace"] = t.pace ? json{{"lambda", t.pace->lambda}, {"e_all", t.pace->e_all}} : json(nullptr);
  j["granularity"] = std::string(to_string(t.granularity));
  j["bank"] = config.bank ? json(*config.bank) : json(nullptr);
  j["pixel_bank"] = config.pixel_bank ? json(*config.pixel_bank) : json(nullptr);
  j["bank_variant"] = std::string(to_string(config.bank_variant));
  j["model"] = {{"arch", std::string(to_string(t.model.arch))},
                {"hidden", t.model.hidden},
                {"width1", t.model.width1},
                {"width2", t.model.width2}};
  j["ece_bins"] = t.ece_bins;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, "", {"preset", "seed", "data", "task", "epochs", "batch_size", "optimizer", "lr_decay",
                     "lr_decay_epoch", "schedule", "svls_schedule", "svls_kernel", "pace", "granularity", "bank",
                     "pixel_bank", "bank_variant", "model", "ece_bins"});
  RunConfig config;
  TrainConfig& t = config.train;
  config.preset = get<std::string>(j, "preset", "", config.preset);
  config.data = get<std::string>(j, "data", "", "");
  t.seed = get<std::uint64_t>(j, "seed", "", 0);
  t.task = wrap([&] { return task_from_string(get<std::string>(j, "task", "", "multiclass")); });
  t.epochs = get<std::size_t>(j, "epochs", "", t.epochs);
  t.batch_size = get<std::size_t>(j, "batch_size", "", t.batch_size);
  if (const auto it = j.find("optimizer"); it != j.end()) {
    check_keys(*it, "optimizer", {"kind", "lr", "momentum", "weight_decay"});
    t.optimizer.kind = wrap([&] { return optimizer_from_string(get<std::string>(*it, "kind", "optimizer", "sgd")); });
    t.optimizer.lr = get<double>(*it, "lr", "optimizer", t.optimizer.lr);
    t.optimizer.momentum = get<double>(*it, "momentum", "optimizer", t.optimizer.momentum);
    t.optimizer.weight_decay = get<double>(*it, "weight_decay", "optimizer", t.optimizer.weight_decay);
  }
  t.lr_decay = get<double>(j, "lr_decay", "", t.lr_decay);
  if (j.contains("lr_decay_epoch") && !j["lr_decay_epoch"].is_null()) {
    t.lr_decay_epoch = get<std::size_t>(j, "lr_decay_epoch", "", 0);
  }
  if (j.contains("schedule") && !j["schedule"].is_null()) t.uls_schedule = schedule_from_json(j["schedule"], "schedule");
  if (j.contains("svls_schedule") && !j["svls_schedule"].is_null()) {
    t.svls_schedule = schedule_from_json(j["svls_schedule"], "svls_schedule");
  }
  t.svls_kernel = get<std::size_t>(j, "svls_kernel", "", t.svls_kernel);
  if (j.contains("pace") && !j["pace"].is_null()) {
    const json& p = j["pace"];
    check_keys(p, "pace", {"lambda", "e_all"});
    t.pace = PaceConfig{get<double>(p, "lambda", "pace", 1.0), get<double>(p, "e_all", "pace", 1.0)};
  }
  t.granularity = wrap([&] { return granularity_from_string(get<std::string>(j, "granularity", "", "sample")); });
  if (j.contains("bank") && !j["bank"].is_null()) config.bank = get<std::string>(j, "bank", "", "");
  if (j.contains("pixel_bank") && !j["pixel_bank"].is_null()) {
    config.pixel_bank = get<std::string>(j, "pixel_bank", "", "");
  }
  config.bank_variant =
      wrap([&] { return bank_source_from_string(get<std::string>(j, "bank_variant", "", "plain")); });
  if (const auto it = j.find("model"); it != j.end()) {
    check_keys(*it, "model", {"arch", "hidden", "width1", "width2"});
    t.model.arch = wrap([&] { return architecture_from_string(get<std::string>(*it, "arch", "model", "mlp")); });
    t.model.hidden = get<std::size_t>(*it, "hidden", "model", t.model.hidden);
    t.model.width1 = get<std::size_t>(*it, "width1", "model", t.model.width1);
    t.model.width2 = get<std::size_t>(*it, "width2", "model", t.model.width2);
  }
  t.ece_bins = get<std::size_t>(j, "ece_bins", "", t.ece_bins);
  wrap([&] {
    t.validate();
    return 0;
  });
  return config;
}

RunConfig resolve_config(const std::optional<std::string>& preset_name, const json& file,
                         const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
  if (!file.is_null() && !file.is_object()) throw ConfigError("config file must hold a JSON object");
  json user = file.is_null() ? json::object() : file;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + item + "'");
    set_path(user, std::string_view(item).substr(0, eq), parse_override_value(item.substr(eq + 1)));
  }
  if (preset_name) user["preset"] = *preset_name;
  if (seed) user["seed"] = *seed;

  RunConfig base;
  base.preset = user.contains("preset") && user["preset"].is_string() ? user["preset"].get<std::string>()
                                                                      : std::string("workflow_cls");
  base.train = wrap([&] { return preset(base.preset); });
  json merged = to_json(base);
  // The default decay epoch follows whatever epoch count the user picks.
  merged.erase("lr_decay_epoch");
  merged.merge_patch(user);

  RunConfig config = run_config_from_json(merged);
  if (config.data.empty()) config.data = default_data_spec(config.train.task);
  auto& schedule = config.train.uls_schedule;
  if (schedule && schedule->kind == ScheduleKind::random && !has_path(user, {"schedule", "seed"})) {
    schedule->seed = named_seed(config.train.seed, "schedule");
  }
  config.train.lr_decay_epoch = config.train.decay_epoch();
  return config;
}

std::string default_data_spec(TaskKind task) {
  switch (task) {
  case TaskKind::multiclass:
    return "blobs";
  case TaskKind::multilabel:
    return "multilabel";
  case TaskKind::segmentation:
    return "shapes";
  }
  return "blobs";
}

DataSpec parse_data_spec(const std::string& text) {
  DataSpec spec;
  const auto colon = text.find(':');
  spec.kind = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  if (spec.kind == "cifar10") {
    const auto val = rest.rfind(",val=");
    spec.path = rest.substr(0, val);
    if (val != std::string::npos) spec.params.emplace_back("val", rest.substr(val + 5));
    if (spec.path.empty()) throw ConfigError("cifar10 data spec needs a path: cifar10:<dir or file>");
    return spec;
  }
  if (spec.kind != "blobs" && spec.kind != "multilabel" && spec.kind != "shapes") {
    throw ConfigError("unknown data source '" + spec.kind + "' (expected blobs, multilabel, shapes or cifar10)");
  }
  std::string_view view(rest);
  while (!view.empty()) {
    const auto comma = view.find(',');
    const std::string_view item = view.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("data spec parameters must look like key=value: '" + std::string(item) + "'");
    }
    spec.params.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (comma == std::string_view::npos) break;
    view.remove_prefix(comma + 1);
  }
  return spec;
}

std::pair<LabeledDataset, LabeledDataset> load_data(const std::string& text, std::uint64_t seed) {
  const DataSpec spec = parse_data_spec(text);
  SpecParams params(spec);
  const std::uint64_t data_seed = named_seed(seed, "data");
  LabeledDataset all;
  std::size_t val = 0;
  double noise = 0.0; // blobs only; applied to the training split
  if (spec.kind == "blobs") {
    BlobsParams p;
    p.classes = params.take<std::size_t>("K", 8);
    const auto n = params.take<std::size_t>("n", 1200);
    p.dim = params.take<std::size_t>("dim", 16);
    p.spread = params.take<double>("spread", 0.1);
    noise = params.take<double>("noise", 0.2);
    p.seed = data_seed;
    val = params.take<std::size_t>("val", default_val(n));
    params.finish();
    if (p.classes < 2 || n % p.classes != 0) {
      throw ConfigError("blobs needs K >= 2 and n divisible by K");
    }
    p.per_class = n / p.classes;
    all = wrap([&] { return gen_blobs(p); });
  } else if (spec.kind == "multilabel") {
    const auto labels = params.take<std::size_t>("L", 5);
    const auto n = params.take<std::size_t>("n", 600);
    const auto dim = params.take<std::size_t>("dim", 16);
    val = params.take<std::size_t>("val", default_val(n));
    params.finish();
    all = wrap([&] { return gen_multilabel(labels, n, dim, data_seed); });
  } else if (spec.kind == "shapes") {
    const auto h = params.take<std::size_t>("H", 16);
    const auto w = params.take<std::size_t>("W", 16);
    const auto k = params.take<std::size_t>("K", 3);
    const auto n = params.take<std::size_t>("n", 120);
    val = params.take<std::size_t>("val", default_val(n));
    params.finish();
    all = wrap([&] { return gen_shapes_seg(h, w, k, n, data_seed); });
  } else {
    if (!std::filesystem::exists(spec.path)) throw ConfigError("CIFAR-10 path does not exist: " + spec.path);
    all = load_cifar10(spec.path);
    val = params.has("val") ? params.take<std::size_t>("val", 0) : std::max<std::size_t>(1, all.size() / 10);
    params.finish();
  }
  if (val == 0 || val >= all.size()) {
    throw ConfigError("validation count " + std::to_string(val) + " must be in [1, " + std::to_string(all.size()) +
                      ")");
  }
  auto sets = split_dataset(all, val, named_seed(seed, "split"));
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("blobs noise must be in [0, 1]");
  if (noise > 0.0) flip_labels(sets.first, noise, named_seed(seed, "label_noise"));
  return sets;
}

std::size_t worker_threads() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("PCBLS_THREADS"); env != nullptr && *env != '\0') {
    requested = parse_number<std::size_t>("PCBLS_THREADS", env);
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

} // namespace pcbls::cli
