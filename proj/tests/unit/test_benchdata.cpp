#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <fstream>
#include <limits>
#include <set>

#include "oracles.hpp"
#include "xbar/benchdata/dataset.hpp"
#include "xbar/benchdata/model_io.hpp"
#include "xbar/benchdata/ntc.hpp"
#include "xbar/errors.hpp"
#include "xbar/nncore/arch.hpp"
#include "xbar/nncore/train.hpp"

using namespace xbar;
using namespace xbar::data;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("xbar_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TEST(Synthetic, DeterministicForSeed) {
  const Dataset a = gen_synthetic(4, 7), b = gen_synthetic(4, 7), c = gen_synthetic(4, 8);
  EXPECT_EQ(a.emg, b.emg);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.emg, c.emg);
  EXPECT_EQ(a.size(), 4u * kClasses * kSessions);
  EXPECT_NO_THROW(a.validate());
}

TEST(Synthetic, NoiselessEmgIsNearestCentroidSeparable) {
  SynthOptions o;
  o.emg_std = 0;
  o.session_shift_std = 0;
  const Dataset ds = gen_synthetic(3, 1, o);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < kClasses; ++c) {
      const auto mu = emg_centroid(c, o);
      double d = 0;
      for (std::size_t f = 0; f < kEmgFeatures; ++f) d += std::pow(ds.emg.at(i, f) - mu[f], 2);
      if (d < best_d) best_d = d, best = c;
    }
    EXPECT_EQ(best, ds.labels[i]);
  }
}

TEST(Synthetic, ClassMeansRecoverCentroids) {
  SynthOptions o;
  o.session_shift_std = 0;
  const std::size_t n = 200;
  const Dataset ds = gen_synthetic(n, 2, o);
  const double tol = 3 * o.emg_std / std::sqrt(static_cast<double>(n * kSessions));
  for (std::size_t c = 0; c < kClasses; ++c) {
    std::vector<double> mean(kEmgFeatures, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labels[i] == c) {
        ++count;
        for (std::size_t f = 0; f < kEmgFeatures; ++f) mean[f] += ds.emg.at(i, f);
      }
    const auto mu = emg_centroid(c, o);
    for (std::size_t f = 0; f < kEmgFeatures; ++f) EXPECT_NEAR(mean[f] / count, mu[f], tol);
  }
}

TEST(Synthetic, CropTakesCentreOfFrame) {
  const Dataset ds = gen_synthetic(1, 3);
  const Tensor crop = ds.image_crop(4);
  ASSERT_EQ(crop.shape(), (Shape{400}));
  const std::size_t off = (ds.image_size() - kCropSize) / 2;
  EXPECT_EQ(crop[0], ds.images[(4 * 32 + off) * 32 + off]);
  EXPECT_EQ(crop[399], ds.images[(4 * 32 + off + 19) * 32 + off + 19]);
}

TEST(Folds, PartitionLawsOnRandomSessions) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset ds = gen_synthetic(2, static_cast<std::uint64_t>(trial));
    for (auto& s : ds.session) s = rng.below(kSessions);
    // every session must still exist for the split to be defined
    ds.session[0] = 0, ds.session[1] = 1, ds.session[2] = 2;
    const auto folds = cv_folds_by_session(ds);
    std::vector<int> tested(ds.size(), 0);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(folds[k].test_session, k);
      std::set<std::size_t> train_sessions, test_sessions;
      for (std::size_t i : folds[k].train) train_sessions.insert(ds.session[i]);
      for (std::size_t i : folds[k].test) test_sessions.insert(ds.session[i]), ++tested[i];
      EXPECT_EQ(test_sessions, std::set<std::size_t>{k});
      EXPECT_EQ(train_sessions.count(k), 0u);
      EXPECT_EQ(folds[k].train.size() + folds[k].test.size(), ds.size());
    }
    for (int t : tested) EXPECT_EQ(t, 1);
  }
}

TEST(Folds, BalancedSessionsGiveEqualFolds) {
  const auto folds = cv_folds_by_session(gen_synthetic(6, 5));
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 30u);
    EXPECT_EQ(f.train.size(), 60u);
  }
}

TEST(Folds, MissingSessionRejected) {
  Dataset ds = gen_synthetic(1, 5);
  for (auto& s : ds.session) s = 0;
  EXPECT_THROW(cv_folds_by_session(ds), InvalidInput);
}

TEST(Evaluate, PerfectAndConstantRunners) {
  const Dataset ds = gen_synthetic(4, 6);
  const FoldResult perfect = evaluate(ds, [&](std::size_t, std::size_t i) { return ds.labels[i]; });
  for (double a : perfect.accuracy) EXPECT_EQ(a, 1.0);
  EXPECT_EQ(perfect.std, 0.0);
  const FoldResult constant = evaluate(ds, [](std::size_t, std::size_t) { return std::size_t{2}; });
  for (double a : constant.accuracy) EXPECT_DOUBLE_EQ(a, 0.2);
  EXPECT_DOUBLE_EQ(constant.mean, 0.2);
}

TEST(Evaluate, SampleStandardDeviation) {
  const FoldResult r = summarize_folds({0.5, 0.7, 0.9});
  EXPECT_DOUBLE_EQ(r.mean, 0.7);
  EXPECT_NEAR(r.std, 0.2, 1e-12);  // sqrt((0.04 + 0 + 0.04) / 2)
}

TEST(Csv, HeaderAndRowCount) {
  TempDir dir;
  const Dataset ds = gen_synthetic(1, 2);
  export_csv(ds, dir / "ds.csv");
  std::ifstream in(dir / "ds.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("sample_id,session,label,emg0,", 0), 0u);
  EXPECT_NE(header.find(",px1023"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, ds.size());
}

TEST(Ntc, RoundTripIsBitExact) {
  TempDir dir;
  Rng rng(7);
  NtcFile f;
  f.attributes["note"] = "round trip";
  for (Shape s : {Shape{3}, Shape{2, 5}, Shape{1, 3, 3}, Shape{0}, Shape{7}}) {
    Tensor t(s);
    for (double& v : t.values()) v = as_f32(rng.normal(0, 100));
    f.tensors.push_back({"t" + std::to_string(f.tensors.size()), std::move(t)});
  }
  f.tensors[0].tensor[0] = as_f32(-0.0);
  f.tensors[0].tensor[1] = static_cast<double>(std::numeric_limits<float>::denorm_min());
  save_ntc(f, dir / "m.ntc");
  const NtcFile g = load_ntc(dir / "m.ntc");
  ASSERT_EQ(g.tensors.size(), f.tensors.size());
  for (std::size_t i = 0; i < f.tensors.size(); ++i) {
    EXPECT_EQ(g.tensors[i].name, f.tensors[i].name);
    EXPECT_EQ(g.tensors[i].tensor.shape(), f.tensors[i].tensor.shape());
    for (std::size_t k = 0; k < f.tensors[i].tensor.size(); ++k)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(g.tensors[i].tensor[k]),
                std::bit_cast<std::uint64_t>(f.tensors[i].tensor[k]));
  }
  EXPECT_EQ(g.attributes, f.attributes);
  EXPECT_EQ(fs::file_size(ntc_blob_path(dir / "m.ntc")) % 4, 0u);
}

TEST(Ntc, EmptyContainer) {
  TempDir dir;
  save_ntc(NtcFile{}, dir / "e.ntc");
  const NtcFile g = load_ntc(dir / "e.ntc");
  EXPECT_TRUE(g.tensors.empty());
  EXPECT_EQ(g.find("x"), nullptr);
  EXPECT_THROW(g.get("x"), NtcError);
}

TEST(Ntc, TruncatedBlobNamesTensor) {
  TempDir dir;
  NtcFile f;
  f.tensors.push_back({"a", Tensor({4}, 1.0)});
  f.tensors.push_back({"weights", Tensor({100}, 2.0)});
  save_ntc(f, dir / "t.ntc");
  fs::resize_file(ntc_blob_path(dir / "t.ntc"), 100);
  try {
    load_ntc(dir / "t.ntc");
    FAIL() << "truncated blob accepted";
  } catch (const NtcError& e) {
    EXPECT_EQ(e.tensor(), "weights");
    EXPECT_NE(std::string(e.what()).find("blob has 100"), std::string::npos);
  }
}

TEST(Ntc, RejectsInconsistentManifests) {
  TempDir dir;
  NtcFile f;
  f.tensors.push_back({"x", Tensor({2, 2}, 1.0)});
  f.tensors.push_back({"y", Tensor({2}, 3.0)});
  save_ntc(f, dir / "ok.ntc");
  const std::string good = read_text(dir / "ok.ntc");
  const auto bad = [&](const std::string& from, const std::string& to) {
    std::string text = good;
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    text.replace(pos, from.size(), to);
    write_text(dir / "ok.ntc", text);
    try {
      load_ntc(dir / "ok.ntc");
      ADD_FAILURE() << "accepted manifest with " << to;
      return std::string("<accepted>");
    } catch (const NtcError& e) {
      return e.tensor();
    }
  };
  EXPECT_EQ(bad("\"f32\"", "\"f64\""), "x");
  EXPECT_EQ(bad("\"byte_length\": 16", "\"byte_length\": 12"), "x");
  EXPECT_EQ(bad("\"byte_offset\": 16", "\"byte_offset\": 4"), "y");
  EXPECT_EQ(bad("\"byte_offset\": 16", "\"byte_offset\": 8"), "y");  // overlaps x
  EXPECT_EQ(bad("\"name\": \"y\"", "\"name\": \"x\""), "x");
  EXPECT_EQ(bad("{", "["), "");
  write_text(dir / "ok.ntc", "not json at all");
  EXPECT_THROW(load_ntc(dir / "ok.ntc"), NtcError);
  EXPECT_THROW(load_ntc(dir / "missing.ntc"), NtcError);
}

TEST(ModelIo, NetworkRoundTrip) {
  TempDir dir;
  Rng rng(8);
  for (nn::NetworkSpec net : {nn::make_network("16-230-5"), nn::make_network("400-210-5", {}, 4),
                              nn::make_network("2c3-2p-4c3-10-5", {1, 12, 12}),
                              nn::make_fused({{"16-12-5", {}, 1}, {"3c3-5", {1, 6, 6}, 2}}, 5)}) {
    xbar::testing::randomize(net, rng);
    nn::for_each_layer(net, [](nn::LayerSpec& l) {
      for (double& v : l.weights.values()) v = as_f32(v);
      for (double& v : l.bias.values()) v = as_f32(v);
    });
    save_network(net, dir / "net.ntc");
    const nn::NetworkSpec back = load_network(dir / "net.ntc");
    EXPECT_EQ(back.branches, net.branches);
    EXPECT_EQ(back.head, net.head);
    EXPECT_EQ(back.input_shapes, net.input_shapes);
    EXPECT_EQ(back.replicas, net.replicas);
  }
}

TEST(ModelIo, RejectsWrongShapesAndKinds) {
  nn::NetworkSpec net = nn::make_network("4-3-2");
  NtcFile f = network_to_ntc(net);
  NtcFile wrong = f;
  wrong.tensors[0].tensor = Tensor({5, 5});
  EXPECT_THROW(network_from_ntc(wrong), NtcError);
  wrong = f;
  wrong.attributes["kind"] = "dataset";
  EXPECT_THROW(network_from_ntc(wrong), NtcError);
  wrong = f;
  wrong.attributes.erase("branch0.arch");
  EXPECT_THROW(network_from_ntc(wrong), NtcError);
}

TEST(ModelIo, DatasetRoundTrip) {
  TempDir dir;
  SynthOptions o;
  o.image_size = 20;
  Dataset ds = gen_synthetic(2, 9, o);
  for (double& v : ds.emg.values()) v = as_f32(v);
  for (double& v : ds.images.values()) v = as_f32(v);
  save_dataset(ds, dir / "ds.ntc");
  const Dataset back = load_dataset(dir / "ds.ntc");
  EXPECT_EQ(back.emg, ds.emg);
  EXPECT_EQ(back.images, ds.images);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.session, ds.session);
}
