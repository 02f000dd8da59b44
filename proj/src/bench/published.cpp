#include "xbar/bench/published.hpp"

namespace xbar::bench {

namespace {

PublishedRow row(const char* platform, const char* modality, const char* arch, const char* network, double acc,
                 double energy, double time, double edp) {
  return {platform, modality, network, acc, energy, time, edp,
          std::string("published comparison table, ") + platform + ", " + modality + " (" + arch + ")"};
}

}  // namespace

const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows{
      row("Loihi", "EMG", "MLP 16-128-128-5", "", 55.7, 173.2, 5.89, 1.0),
      row("Loihi", "DVS", "CNN 8c3-2p-16c3-2p-32c3-512-5", "", 92.1, 815.3, 6.64, 5.4),
      row("Loihi", "EMG+DVS", "fused CNN", "", 96.0, 1104.5, 7.75, 8.6),
      row("ODIN+MorphIC", "EMG", "MLP 16-230-5", "", 53.6, 7.42, 23.5, 0.17),
      row("ODIN+MorphIC", "DVS", "MLP 4x400-210-5", "", 85.1, 57.2, 17.3, 1.00),
      row("ODIN+MorphIC", "EMG+DVS", "fused MLP", "", 89.4, 37.4, 19.5, 0.42),
      row("Embedded GPU", "EMG", "MLP 16-128-128-5", "mlp_emg_a", 68.1, 25.5e3, 3.8, 97.3),
      row("Embedded GPU", "EMG", "MLP 16-230-5", "mlp_emg_b", 67.2, 23.9e3, 2.8, 67.2),
      row("Embedded GPU", "APS", "CNN 8c3-2p-16c3-2p-32c3-512-5", "cnn_aps", 92.4, 31.7e3, 5.9, 186.9),
      row("Embedded GPU", "APS", "MLP 4x400-210-5", "mlp_aps", 84.2, 30.2e3, 6.9, 211.3),
      row("Embedded GPU", "EMG+APS", "fused CNN", "fused_cnn", 95.4, 32.1e3, 6.9, 221.1),
      row("Embedded GPU", "EMG+APS", "fused MLP", "fused_mlp", 88.1, 32.0e3, 7.9, 253),
      row("FPGA", "EMG", "MLP 16-128-128-5", "mlp_emg_a", 67.2, 17.6e3, 4.2, 74.1),
      row("FPGA", "EMG", "MLP 16-230-5", "mlp_emg_b", 63.8, 13.9e3, 3.5, 48.9),
      row("FPGA", "APS", "CNN 8c3-2p-16c3-2p-32c3-512-5", "cnn_aps", 96.7, 24.0e3, 5.4, 130.8),
      row("FPGA", "APS", "MLP 4x400-210-5", "mlp_aps", 82.9, 23.1e3, 5.7, 131.4),
      row("FPGA", "EMG+APS", "fused CNN", "fused_cnn", 94.8, 31.2e3, 6.3, 196.3),
      row("FPGA", "EMG+APS", "fused MLP", "fused_mlp", 83.4, 31.1e3, 7.3, 228.2),
      row("Memristive", "EMG", "MLP 16-128-128-5", "mlp_emg_a", 64.6, 0.038, 6.0e-4, 2.38e-8),
      row("Memristive", "EMG", "MLP 16-230-5", "mlp_emg_b", 63.8, 0.026, 4.0e-4, 1.04e-8),
      row("Memristive", "APS", "CNN 8c3-2p-16c3-2p-32c3-512-5", "cnn_aps", 96.2, 4.83, 1.0e-3, 4.83e-6),
      row("Memristive", "APS", "MLP 4x400-210-5", "mlp_aps", 82.4, 0.18, 4.0e-4, 7.2e-8),
      row("Memristive", "EMG+APS", "fused CNN", "fused_cnn", 94.8, 4.90, 1.2e-3, 5.88e-6),
      row("Memristive", "EMG+APS", "fused MLP", "fused_mlp", 83.4, 0.33, 6.0e-4, 1.98e-7),
  };
  return rows;
}

const PublishedRow* find_published(const std::string& platform, const std::string& network) {
  for (const auto& r : published_rows())
    if (r.platform == platform && r.network == network) return &r;
  return nullptr;
}

}  // namespace xbar::bench
