#include "xbar/benchdata/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "xbar/errors.hpp"
#include "xbar/rng.hpp"

namespace xbar::data {

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (session.size() != n || emg.shape() != Shape{n, kEmgFeatures} || images.rank() != 4 || images.dim(0) != n ||
      images.dim(1) != 1 || images.dim(2) != images.dim(3))
    throw InvalidInput("dataset fields disagree on sample count or shape");
  std::array<std::array<bool, kClasses>, kSessions> seen{};
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= kClasses) throw InvalidInput("label " + std::to_string(labels[i]) + " outside [0, 5)");
    if (session[i] >= kSessions) throw InvalidInput("session " + std::to_string(session[i]) + " outside [0, 3)");
    seen[session[i]][labels[i]] = true;
  }
  for (std::size_t s = 0; s < kSessions; ++s)
    for (std::size_t c = 0; c < kClasses; ++c)
      if (!seen[s][c])
        throw InvalidInput("session " + std::to_string(s) + " has no sample of class " + std::to_string(c));
}

Tensor Dataset::emg_sample(std::size_t i) const {
  const auto* p = emg.storage().data() + i * kEmgFeatures;
  return Tensor({kEmgFeatures}, std::vector<double>(p, p + kEmgFeatures));
}

Tensor Dataset::image_sample(std::size_t i) const {
  const std::size_t s = image_size(), n = s * s;
  const auto* p = images.storage().data() + i * n;
  return Tensor({1, s, s}, std::vector<double>(p, p + n));
}

Tensor Dataset::image_crop(std::size_t i) const {
  const std::size_t s = image_size();
  if (s < kCropSize) throw InvalidInput("frames smaller than the 20x20 crop");
  const std::size_t o = (s - kCropSize) / 2;
  const auto* p = images.storage().data() + i * s * s;
  std::vector<double> out;
  out.reserve(kCropSize * kCropSize);
  for (std::size_t y = 0; y < kCropSize; ++y)
    for (std::size_t x = 0; x < kCropSize; ++x) out.push_back(p[(o + y) * s + o + x]);
  return Tensor({kCropSize * kCropSize}, std::move(out));
}

std::vector<double> emg_centroid(std::size_t cls, const SynthOptions& opts) {
  std::vector<double> c(kEmgFeatures, 0.0);
  c.at(cls) = opts.emg_scale;
  return c;
}

namespace {

// Whether crop pixel (y, x) of the 20 x 20 centre region is lit for `cls`.
bool pattern_on(std::size_t cls, std::size_t y, std::size_t x) {
  const auto in = [](std::size_t v, std::size_t lo, std::size_t hi) { return v >= lo && v <= hi; };
  switch (cls) {
    case 0:  // horizontal bar
      return in(y, 8, 11) && in(x, 2, 17);
    case 1:  // vertical bar
      return in(x, 8, 11) && in(y, 2, 17);
    case 2:  // thin cross
      return (in(y, 9, 10) && in(x, 3, 16)) || (in(x, 9, 10) && in(y, 3, 16));
    case 3:  // diagonal
      return in(y, 2, 17) && in(x, 2, 17) && (x >= y ? x - y : y - x) <= 1;
    case 4:  // box outline
      return in(y, 4, 15) && in(x, 4, 15) && !(in(y, 6, 13) && in(x, 6, 13));
    default:
      return false;
  }
}

}  // namespace

Dataset gen_synthetic(std::size_t n_per_class_session, std::uint64_t seed, const SynthOptions& opts) {
  if (n_per_class_session == 0) throw InvalidInput("gen_synthetic needs at least one sample per class and session");
  if (opts.image_size < kCropSize) throw InvalidInput("image_size must be >= 20");
  const std::size_t n = n_per_class_session * kClasses * kSessions;
  const std::size_t s = opts.image_size, px = s * s, o = (s - kCropSize) / 2;

  Dataset ds;
  ds.emg = Tensor({n, kEmgFeatures});
  ds.images = Tensor({n, 1, s, s});
  ds.labels.reserve(n);
  ds.session.reserve(n);

  Rng rng(seed);
  std::array<std::array<double, kEmgFeatures>, kSessions> shift{};
  for (auto& sh : shift)
    for (double& v : sh) v = rng.normal(0.0, opts.session_shift_std);

  std::size_t i = 0;
  for (std::size_t sess = 0; sess < kSessions; ++sess) {
    for (std::size_t cls = 0; cls < kClasses; ++cls) {
      const auto centroid = emg_centroid(cls, opts);
      for (std::size_t k = 0; k < n_per_class_session; ++k, ++i) {
        ds.labels.push_back(cls);
        ds.session.push_back(sess);
        double* e = ds.emg.storage().data() + i * kEmgFeatures;
        for (std::size_t j = 0; j < kEmgFeatures; ++j) e[j] = centroid[j] + shift[sess][j] + rng.normal(0.0, opts.emg_std);
        double* img = ds.images.storage().data() + i * px;
        for (std::size_t y = 0; y < s; ++y)
          for (std::size_t x = 0; x < s; ++x) {
            const bool lit = y >= o && x >= o && y < o + kCropSize && x < o + kCropSize && pattern_on(cls, y - o, x - o);
            img[y * s + x] = (lit ? 1.0 : 0.0) + rng.normal(0.0, opts.pixel_noise);
          }
      }
    }
  }
  return ds;
}

std::array<FoldSplit, 3> cv_folds_by_session(const Dataset& ds) {
  std::array<bool, kSessions> present{};
  for (auto s : ds.session) {
    if (s >= kSessions) throw InvalidInput("session index " + std::to_string(s) + " outside [0, 3)");
    present[s] = true;
  }
  for (std::size_t s = 0; s < kSessions; ++s)
    if (!present[s]) throw InvalidInput("dataset has no samples from session " + std::to_string(s));

  std::array<FoldSplit, 3> folds;
  for (std::size_t k = 0; k < kSessions; ++k) {
    folds[k].test_session = k;
    for (std::size_t i = 0; i < ds.session.size(); ++i) (ds.session[i] == k ? folds[k].test : folds[k].train).push_back(i);
  }
  return folds;
}

FoldResult summarize_folds(const std::array<double, 3>& accuracy) {
  FoldResult r;
  r.accuracy = accuracy;
  r.mean = std::accumulate(accuracy.begin(), accuracy.end(), 0.0) / 3.0;
  double ss = 0.0;
  for (double a : accuracy) ss += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(ss / 2.0);
  return r;
}

FoldResult evaluate(const Dataset& ds, const FoldRunner& runner) {
  const auto folds = cv_folds_by_session(ds);
  std::array<double, 3> acc{};
  for (std::size_t k = 0; k < folds.size(); ++k) {
    std::size_t correct = 0;
    for (auto i : folds[k].test)
      if (runner(k, i) == ds.labels[i]) ++correct;
    acc[k] = static_cast<double>(correct) / static_cast<double>(folds[k].test.size());
  }
  return summarize_folds(acc);
}

void export_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t px = ds.image_size() * ds.image_size();
  out << "sample_id,session,label";
  for (std::size_t j = 0; j < kEmgFeatures; ++j) out << ",emg" << j;
  for (std::size_t j = 0; j < px; ++j) out << ",px" << j;
  out << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << i << ',' << ds.session[i] << ',' << ds.labels[i];
    for (std::size_t j = 0; j < kEmgFeatures; ++j) out << ',' << ds.emg[i * kEmgFeatures + j];
    for (std::size_t j = 0; j < px; ++j) out << ',' << ds.images[i * px + j];
    out << '\n';
  }
}

}  // namespace xbar::data
