#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "xbar/tensor.hpp"

namespace xbar::data {

inline constexpr std::size_t kClasses = 5;
inline constexpr std::size_t kSessions = 3;
inline constexpr std::size_t kEmgFeatures = 16;
inline constexpr std::size_t kCropSize = 20;

/// Two-modality gesture dataset: N x 16 EMG features and N x 1 x S x S frames.
struct Dataset {
  Tensor emg;
  Tensor images;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> session;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return images.dim(2); }
  /// Equal N across fields, labels < 5, sessions < 3, every session holds every class.
  void validate() const;

  Tensor emg_sample(std::size_t i) const;
  Tensor image_sample(std::size_t i) const;
  /// Centre 20 x 20 crop of the frame, flattened to 400 values.
  Tensor image_crop(std::size_t i) const;
};

struct SynthOptions {
  double emg_scale = 2.0;
  double emg_std = 0.6;
  double session_shift_std = 0.3;
  double pixel_noise = 0.1;
  std::size_t image_size = 32;
};

/// Class centroid of the synthetic EMG features: emg_scale * e_class.
std::vector<double> emg_centroid(std::size_t cls, const SynthOptions& opts = {});

/// n samples per (session, class). EMG: Gaussian clusters around the class
/// centroid plus a per-session shift; frames: a class-specific bar, cross,
/// diagonal or box inside the centre crop plus pixel noise.
Dataset gen_synthetic(std::size_t n_per_class_session, std::uint64_t seed, const SynthOptions& opts = {});

struct FoldSplit {
  std::size_t test_session = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Fold k tests on session k and trains on the other two.
std::array<FoldSplit, 3> cv_folds_by_session(const Dataset& ds);

/// Per-fold accuracy with mean and sample (n-1) standard deviation.
struct FoldResult {
  std::array<double, 3> accuracy{};
  double mean = 0.0;
  double std = 0.0;
};

FoldResult summarize_folds(const std::array<double, 3>& accuracy);

/// Predicted class for dataset sample `sample` from the model trained for `fold`.
using FoldRunner = std::function<std::size_t(std::size_t fold, std::size_t sample)>;

FoldResult evaluate(const Dataset& ds, const FoldRunner& runner);

/// sample_id,session,label,emg0..emg15,px0..pxN
void export_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace xbar::data
