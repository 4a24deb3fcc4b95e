#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcbls/data.hpp"
#include "pcbls/pacing.hpp"
#include "pcbls/trainer.hpp"

namespace pcbls::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Bad configuration or command-line input; maps to exit code 2.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Everything needed to replay one run.
struct RunConfig {
  std::string preset = "workflow_cls";
  std::string data;                          // data source spec, see parse_data_spec
  std::optional<std::string> bank;           // sample bank CSV
  std::optional<std::string> pixel_bank;     // pixel bank directory
  BankSource bank_variant = BankSource::plain; // used when the bank is built automatically
  TrainConfig train;
};

nlohmann::json to_json(const RunConfig& config);

/// Strict: unknown keys and wrong types are ConfigErrors.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Layers preset <- config file <- `key=value` overrides <- --seed, then fills derived defaults.
RunConfig resolve_config(const std::optional<std::string>& preset_name, const nlohmann::json& file,
                         const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed);

/// Parsed data source spec. Blob label noise only touches the training split.
///   blobs[:K=8,n=1200,dim=16,spread=0.1,noise=0.2,val=200]
///   multilabel[:L=5,n=600,dim=16,val=100]
///   shapes[:H=16,W=16,K=3,n=120,val=20]
///   cifar10:<path>[,val=5000]
struct DataSpec {
  std::string kind;
  std::string path;
  std::vector<std::pair<std::string, std::string>> params;
};

DataSpec parse_data_spec(const std::string& text);

/// Generates or loads the data, then splits it into (train, val) with seeds derived from `seed`.
std::pair<LabeledDataset, LabeledDataset> load_data(const std::string& spec, std::uint64_t seed);

/// Default data spec for a task.
std::string default_data_spec(TaskKind task);

/// Worker threads from PCBLS_THREADS (unset or 0 = hardware concurrency).
std::size_t worker_threads();

/// Entry point; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pcbls::cli
