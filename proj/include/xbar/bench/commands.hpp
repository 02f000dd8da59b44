#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xbar/bench/config.hpp"
#include "xbar/bench/published.hpp"
#include "xbar/bench/report.hpp"
#include "xbar/benchdata/dataset.hpp"
#include "xbar/costmod/cost.hpp"
#include "xbar/memsim/mapping.hpp"
#include "xbar/nncore/train.hpp"

namespace xbar::bench {

/// Artifact locations under the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path dataset() const { return root / "data" / "dataset.ntc"; }
  std::filesystem::path dataset_csv() const { return root / "data" / "dataset.csv"; }
  std::filesystem::path model(const std::string& network, std::size_t fold) const;
  std::filesystem::path train_log() const { return root / "train_log.csv"; }
  std::filesystem::path train_summary() const { return root / "train_summary.csv"; }
  std::filesystem::path fixed_point() const { return root / "fixed_point.csv"; }
  std::filesystem::path convert_summary() const { return root / "convert_summary.json"; }
  std::filesystem::path sweep_csv() const { return root / "sweep.csv"; }
  std::filesystem::path sweep_json() const { return root / "sweep.json"; }
  std::filesystem::path cost_csv() const { return root / "cost.csv"; }
  std::filesystem::path cost_json() const { return root / "cost.json"; }
  std::filesystem::path cost_layers_csv() const { return root / "cost_layers.csv"; }
};

data::Dataset make_dataset(const RunConfig& cfg);

/// Trains `network` on the training sessions of `fold`. Initialization and
/// shuffling are keyed on (train.seed, network, fold).
nn::TrainResult train_network(const RunConfig& cfg, const data::Dataset& ds, const std::string& network,
                              std::size_t fold);

/// Evenly strided subset of the fold's training samples used to fit the
/// per-layer tuning and the input scale.
std::vector<std::vector<Tensor>> calibration_inputs(const RunConfig& cfg, const data::Dataset& ds,
                                                    const std::string& network, std::size_t fold);

/// Device configuration of one trial. The draw is keyed on
/// (seed, network, fold) only, so one seed sees the same standard-normal
/// deviates at every sigma.
mem::DeviceConfig trial_device(const RunConfig& cfg, const std::string& network, std::size_t fold, double sigma,
                               std::uint64_t seed);

/// Test accuracy of the mapped model for one trial.
double trial_accuracy(const RunConfig& cfg, const data::Dataset& ds, const nn::NetworkSpec& net,
                      const std::string& network, std::size_t fold, double sigma, std::uint64_t seed);

using ModelLookup = std::function<const nn::NetworkSpec&(const std::string& network, std::size_t fold)>;

/// All (network, sigma, seed, fold) trials, sorted by row_less.
std::vector<ReportRow> sweep_rows(const RunConfig& cfg, const data::Dataset& ds, const ModelLookup& models,
                                  std::size_t threads);

struct CostRow {
  std::string network;
  cost::CostReport report;
  const PublishedRow* published = nullptr;
  bool latency_match = false;
  double energy_ratio = 0.0;
  /// Accepted ratio band is [1/band, band].
  double band = 5.0;
  bool within_band = false;
};

/// Latency MATCH means equality up to floating-point representation.
CostRow cost_row(const RunConfig& cfg, const std::string& network);

// Subcommands. Each writes its artifacts under cfg.out_dir and a short
// human-readable summary to `log`.
data::Dataset cmd_gen_data(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::size_t threads, std::ostream& log);
void cmd_convert(const RunConfig& cfg, std::ostream& log);
std::vector<ReportRow> cmd_sweep(const RunConfig& cfg, std::size_t threads, std::ostream& log);
std::vector<CostRow> cmd_cost(const RunConfig& cfg, std::ostream& log);
std::vector<TrendVerdict> cmd_report(const RunConfig& cfg, std::ostream& log);

}  // namespace xbar::bench
