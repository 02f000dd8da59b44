#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xbar/benchdata/dataset.hpp"
#include "xbar/costmod/cost.hpp"
#include "xbar/errors.hpp"
#include "xbar/fxpquant/fixed_point.hpp"
#include "xbar/memsim/device.hpp"
#include "xbar/memsim/mapping.hpp"
#include "xbar/nncore/train.hpp"

namespace xbar::bench {

/// Config file is malformed, has unknown keys, or holds an unphysical value.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// An input artifact (dataset, model, sweep table) is not where it should be.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::size_t samples_per_class_session = 20;
  std::uint64_t seed = 1;
  data::SynthOptions synth;
};

struct RunConfig {
  std::vector<std::string> networks{"mlp_emg_b", "cnn_aps"};
  DataConfig data;
  nn::TrainConfig train;
  /// sigma and seed are overwritten per trial.
  mem::DeviceConfig device;
  mem::ConversionOptions conversion;
  std::vector<double> sigmas{0, 100, 200, 300, 400, 500};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t calibration_samples = 64;
  cost::CostParams cost;
  /// Empty skips the fixed-point report during training.
  std::vector<fxp::FixedPointFormat> fixed_point;
  std::filesystem::path out_dir = "xbar_out";
  std::optional<std::size_t> threads;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Parses and validates; every object rejects keys it does not know.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON for a config (all fields, defaults filled in).
std::string dump_config(const RunConfig& cfg);

/// "0,3,5" or "0-9" or a mix such as "0-2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace xbar::bench
