#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xbar::bench {

/// One (network, sigma, seed, fold) trial of a sweep.
struct ReportRow {
  std::string network;
  std::string modality;
  double sigma = 0.0;
  /// nullopt: continuous conductance range.
  std::optional<std::size_t> n_states;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double energy_j = 0.0;
  double latency_s = 0.0;
  double edp_js = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Total order used for every written table: (network, sigma, seed, fold).
bool row_less(const ReportRow& a, const ReportRow& b);

void write_rows_csv(std::span<const ReportRow> rows, const std::filesystem::path& path);
void write_rows_json(std::span<const ReportRow> rows, const std::filesystem::path& path);
/// Throws MissingArtifact if absent and InvalidInput on malformed content.
std::vector<ReportRow> read_rows_csv(const std::filesystem::path& path);

/// Accuracy at one sigma: per seed the 3-fold mean, then mean, sample std
/// and standard error over seeds.
struct SweepPoint {
  double sigma = 0.0;
  std::size_t seeds = 0;
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
};

/// Step i -> i+1 of the sigma grid. The change is paired per seed because a
/// seed keeps its device draws across sigma; `allowance` is the standard
/// error of that paired change.
struct SweepStep {
  double change = 0.0;
  double allowance = 0.0;
  bool ok = true;
};

struct TrendVerdict {
  std::string network;
  std::string modality;
  std::vector<SweepPoint> points;
  std::vector<SweepStep> steps;
  /// Every step is non-increasing within its allowance.
  bool monotone = true;
  /// mean at the first sigma minus mean at the last.
  double drop = 0.0;
  bool drop_ok = false;
  bool pass() const { return monotone && drop_ok; }
};

/// One verdict per network in first-appearance order of the sorted rows.
/// Throws InvalidInput on empty input.
std::vector<TrendVerdict> analyze_trend(std::span<const ReportRow> rows, double min_drop = 0.05);

std::string format_report(std::span<const TrendVerdict> verdicts);

/// report.txt plus fig7_<network>.tsv (sigma, mean accuracy) and
/// fig7_<network>_std.tsv (sigma, std over seeds) per network.
void write_report(std::span<const TrendVerdict> verdicts, const std::filesystem::path& dir);

}  // namespace xbar::bench
