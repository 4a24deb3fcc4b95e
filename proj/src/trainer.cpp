#include "pcbls/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcbls/evaluation.hpp"
#include "pcbls/losses.hpp"
#include "pcbls/rng.hpp"
#include "pcbls/soft_labels.hpp"

namespace pcbls {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(Granularity g) {
  return g == Granularity::sample ? "sample" : "pixel";
}

Granularity granularity_from_string(std::string_view name) {
  if (name == "sample") return Granularity::sample;
  if (name == "pixel") return Granularity::pixel;
  throw std::invalid_argument("unknown pacing granularity '" + std::string(name) + "'");
}

namespace {

// Largest value a schedule can produce.
double schedule_peak(const SmoothingSchedule& s) {
  switch (s.kind) {
  case ScheduleKind::anti:
    return std::max(s.init, s.cap);
  case ScheduleKind::random:
    return s.range_hi;
  default:
    return s.init;
  }
}

} // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(optimizer.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  if (!(optimizer.weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("lr_decay must be positive");
  if (lr_decay_epoch && *lr_decay_epoch > epochs) {
    throw std::invalid_argument("lr_decay_epoch exceeds epochs");
  }
  if (uls_schedule) {
    uls_schedule->validate();
    if (!(schedule_peak(*uls_schedule) < 1.0)) {
      throw std::invalid_argument("ULS schedule must stay below 1");
    }
  }
  if (svls_schedule) {
    if (task != TaskKind::segmentation) {
      throw std::invalid_argument("an SVLS schedule needs task=segmentation");
    }
    svls_schedule->validate();
  }
  if (svls_kernel == 0 || svls_kernel % 2 == 0) throw std::invalid_argument("svls_kernel must be odd");
  if (pace) {
    if (!(pace->lambda > 0.0 && pace->lambda <= 1.0)) throw std::invalid_argument("pace lambda must be in (0, 1]");
    if (!(pace->e_all > 0.0 && pace->e_all <= 1.0)) throw std::invalid_argument("pace e_all must be in (0, 1]");
  }
  if (granularity == Granularity::pixel && task != TaskKind::segmentation) {
    throw std::invalid_argument("pixel pacing needs task=segmentation");
  }
  const bool dense = model.arch == Architecture::tiny_fcn;
  if (dense != (task == TaskKind::segmentation)) {
    throw std::invalid_argument("architecture " + std::string(to_string(model.arch)) + " does not fit task " +
                                std::string(to_string(task)));
  }
  if (model.arch == Architecture::mlp && model.hidden == 0) throw std::invalid_argument("mlp hidden must be positive");
  if (dense && (model.width1 == 0 || model.width2 == 0)) {
    throw std::invalid_argument("tiny_fcn widths must be positive");
  }
  if (ece_bins == 0) throw std::invalid_argument("ece_bins must be positive");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
}

std::size_t TrainConfig::decay_epoch() const {
  return lr_decay_epoch ? *lr_decay_epoch : static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(epochs)));
}

TrainConfig preset(std::string_view name) {
  TrainConfig c;
  c.task = TaskKind::multiclass;
  c.optimizer = {OptimizerKind::sgd, 5e-3, 0.9, 5e-3};
  c.lr_decay = 0.1;
  c.uls_schedule = SmoothingSchedule::exponential(0.5, 0.9);
  c.pace = PaceConfig{0.6, 0.4};
  if (name == "workflow_cls") return c;
  if (name == "tool_cls") {
    c.task = TaskKind::multilabel;
    c.optimizer = {OptimizerKind::adam, 1e-4, 0.0, 0.0};
    c.lr_decay = 1.0;
    return c;
  }
  if (name == "segmentation") {
    c.task = TaskKind::segmentation;
    c.optimizer = {OptimizerKind::adam, 1e-4, 0.0, 0.0};
    c.lr_decay = 1.0;
    c.uls_schedule = SmoothingSchedule::exponential(0.6, 0.9);
    c.svls_schedule = SmoothingSchedule::exponential(0.9, 0.5);
    c.pace = PaceConfig{0.8, 0.4};
    c.granularity = Granularity::pixel;
    c.model.arch = Architecture::tiny_fcn;
    return c;
  }
  c.pace.reset();
  if (name == "anti") {
    c.uls_schedule = SmoothingSchedule::anti(0.005, 1.1, 0.5);
  } else if (name == "random") {
    c.uls_schedule = SmoothingSchedule::random(0.0, 0.5, 0);
  } else if (name == "linear") {
    c.uls_schedule = SmoothingSchedule::linear(0.5, 0.015);
  } else if (name == "baseline") {
    c.uls_schedule.reset();
  } else if (name == "ls") {
    c.uls_schedule = SmoothingSchedule::constant(0.1);
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"workflow_cls", "tool_cls", "segmentation", "anti", "random", "linear", "baseline", "ls"};
}

Model make_model(const ModelConfig& config, const LabeledDataset& data, std::uint64_t seed) {
  switch (config.arch) {
  case Architecture::linear_softmax:
    return Model::linear_softmax(data.input_size(), data.num_classes, seed);
  case Architecture::mlp:
    return Model::mlp(data.input_size(), config.hidden, data.num_classes, seed);
  case Architecture::tiny_fcn:
    return Model::tiny_fcn(data.channels, config.width1, config.width2, data.num_classes, seed);
  }
  throw std::invalid_argument("unknown architecture");
}

namespace {

void check_data(const TrainConfig& config, const LabeledDataset& data, const char* what) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument(std::string(what) + " set is empty");
  if (data.task != config.task) {
    throw std::invalid_argument(std::string(what) + " set task " + std::string(to_string(data.task)) +
                                " does not match config task " + std::string(to_string(config.task)));
  }
}

class Optimizer {
public:
  Optimizer(const OptimizerConfig& config, std::size_t size)
      : config_(config), first_(size, 0.0), second_(config.kind == OptimizerKind::adam ? size : 0, 0.0) {}

  void step(std::span<double> params, std::span<double> grad, double lr) {
    const double wd = config_.weight_decay;
    if (config_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + wd * params[i];
        first_[i] = config_.momentum * first_[i] + g;
        params[i] -= lr * first_[i];
      }
      return;
    }
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + wd * params[i];
      first_[i] = b1 * first_[i] + (1.0 - b1) * g;
      second_[i] = b2 * second_[i] + (1.0 - b2) * g * g;
      params[i] -= lr * (first_[i] / c1) / (std::sqrt(second_[i] / c2) + eps);
    }
  }

private:
  OptimizerConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  std::uint64_t t_ = 0;
};

LossKind loss_for(TaskKind task) {
  switch (task) {
  case TaskKind::multiclass:
    return LossKind::soft_ce;
  case TaskKind::multilabel:
    return LossKind::soft_bce;
  case TaskKind::segmentation:
    return LossKind::masked_pixel_ce;
  }
  return LossKind::soft_ce;
}

} // namespace

TrainResult train(const TrainConfig& config, const LabeledDataset& train_data, const LabeledDataset& val_data,
                  const PacingBanks& banks, const TrainHooks& hooks) {
  config.validate();
  check_data(config, train_data, "training");
  check_data(config, val_data, "validation");
  if (val_data.input_size() != train_data.input_size() || val_data.num_classes != train_data.num_classes ||
      val_data.channels != train_data.channels) {
    throw std::invalid_argument("training and validation sets have different shapes");
  }
  const std::size_t n = train_data.size();
  const bool pixel_pace = config.pace && config.granularity == Granularity::pixel;
  const bool sample_pace = config.pace && config.granularity == Granularity::sample;
  if (sample_pace) {
    if (!banks.samples) throw std::invalid_argument("sample pacing needs a sample bank");
    if (banks.samples->size() != n) {
      throw std::invalid_argument("sample bank has " + std::to_string(banks.samples->size()) + " entries for " +
                                  std::to_string(n) + " training samples");
    }
    for (const auto& entry : banks.samples->entries()) {
      if (entry.sample_id >= n) throw std::invalid_argument("sample bank id out of range");
    }
  }
  if (pixel_pace) {
    if (!banks.pixels) throw std::invalid_argument("pixel pacing needs a pixel bank");
    if (banks.pixels->sample_count() != n) throw std::invalid_argument("pixel bank sample count mismatch");
    for (const auto& map : banks.pixels->maps()) {
      if (map.height != train_data.height || map.width != train_data.width) {
        throw std::invalid_argument("pixel bank map size mismatch");
      }
    }
  }

  Model model = make_model(config.model, train_data, named_seed(config.seed, "init"));
  Optimizer optimizer(config.optimizer, model.parameter_count());
  const LossKind loss_kind = loss_for(config.task);
  const Spatial spatial{train_data.height, train_data.width};
  const std::uint64_t shuffle_seed = named_seed(config.seed, "shuffle");
  std::optional<PacePlan> plan;
  if (config.pace) {
    const std::size_t total = pixel_pace ? banks.pixels->pixel_count() : n;
    plan = PacePlan::create(config.pace->lambda, config.pace->e_all, config.epochs, total);
  }

  TrainResult result{model, {}};
  result.records.reserve(config.epochs);
  std::vector<double> grad_norms;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const auto epoch = static_cast<long long>(e);
    const double eps = config.uls_schedule ? value_at(*config.uls_schedule, epoch) : 0.0;
    const double sigma = config.svls_schedule ? value_at(*config.svls_schedule, epoch) : 0.0;
    const double lr = config.optimizer.lr * (e >= config.decay_epoch() ? config.lr_decay : 1.0);

    std::vector<std::size_t> ids;
    std::vector<std::vector<std::uint8_t>> masks;
    std::size_t active = n;
    if (sample_pace) {
      ids = active_set(*banks.samples, *plan, e);
      std::sort(ids.begin(), ids.end());
      active = ids.size();
    } else {
      ids.resize(n);
      std::iota(ids.begin(), ids.end(), std::size_t{0});
    }
    if (pixel_pace) {
      masks = pixel_mask_at(*banks.pixels, *plan, e);
      active = active_count(*plan, e);
    }
    if (ids.empty()) throw std::logic_error("empty active set");

    Rng rng(mix_seed(shuffle_seed, e));
    for (std::size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[rng.below(i)]);
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < ids.size(); start += config.batch_size) {
      const std::size_t stop = std::min(ids.size(), start + config.batch_size);
      Batch batch{{}, spatial};
      BatchTargets targets;
      for (std::size_t j = start; j < stop; ++j) {
        const std::size_t id = ids[j];
        batch.inputs.emplace_back(train_data.inputs[id]);
        switch (config.task) {
        case TaskKind::multiclass:
          targets.vectors.push_back(
              uls(OneHotLabel{static_cast<std::size_t>(train_data.labels[id]), train_data.num_classes}, eps).probs);
          break;
        case TaskKind::multilabel:
          targets.vectors.push_back(uls_multilabel(train_data.multilabels[id], eps));
          break;
        case TaskKind::segmentation:
          if (config.svls_schedule && sigma > 1e-12) {
            targets.maps.push_back(uls_svls(train_data.label_maps[id], eps, sigma, config.svls_kernel));
          } else {
            targets.maps.push_back(uls_map(train_data.label_maps[id], eps));
          }
          if (pixel_pace) targets.masks.push_back(masks[id]);
          break;
        }
      }
      BackwardOptions options;
      options.threads = config.threads;
      if (hooks.on_sample_gradient) {
        options.observer = [&](std::size_t index, std::span<const double> g) {
          double sq = 0.0;
          for (double v : g) sq += v * v;
          hooks.on_sample_gradient(e, ids[start + index], std::sqrt(sq));
        };
      }
      LossValue value = backward(result.model, batch, targets, loss_kind, options);
      optimizer.step(result.model.params(), value.gradient, lr);
      loss_sum += value.loss * static_cast<double>(stop - start);
    }

    EpochRecord record;
    record.epoch = e;
    record.active_count = active;
    record.eps = eps;
    record.sigma = sigma;
    record.train_loss = loss_sum / static_cast<double>(ids.size());
    record.metrics = evaluate(result.model, val_data, config.ece_bins);
    result.records.push_back(std::move(record));
  }
  return result;
}

TrainResult train_baseline(TrainConfig config, const LabeledDataset& train_data, const LabeledDataset& val_data) {
  config.uls_schedule.reset();
  config.svls_schedule.reset();
  config.pace.reset();
  return train(config, train_data, val_data);
}

std::string metrics_csv(const std::vector<EpochRecord>& records) {
  std::string out = "epoch,active_count,eps,sigma,train_loss";
  if (!records.empty()) {
    for (const auto& [name, value] : records.front().metrics) out += "," + name;
  }
  out += "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  };
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.active_count);
    put(r.eps);
    put(r.sigma);
    put(r.train_loss);
    for (const auto& [name, value] : r.metrics) put(value);
    out += "\n";
  }
  return out;
}

} // namespace pcbls
