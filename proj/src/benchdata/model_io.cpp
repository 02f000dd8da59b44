#include "xbar/benchdata/model_io.hpp"

#include <charconv>

#include "xbar/errors.hpp"
#include "xbar/nncore/arch.hpp"

namespace xbar::data {

namespace {

std::string seq_prefix(std::size_t branch, bool head) { return head ? "head" : "b" + std::to_string(branch); }

Shape parse_shape(const std::string& s, const std::string& key) {
  Shape shape;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('x', start);
    if (end == std::string::npos) end = s.size();
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + end, v);
    if (ec != std::errc{} || ptr != s.data() + end || v == 0)
      throw NtcError("", "attribute " + key + " is not a shape: '" + s + "'");
    shape.push_back(v);
    start = end + 1;
  }
  return shape;
}

const std::string& attr(const NtcFile& f, const std::string& key) {
  const auto it = f.attributes.find(key);
  if (it == f.attributes.end()) throw NtcError("", "missing attribute '" + key + "'");
  return it->second;
}

std::size_t attr_count(const NtcFile& f, const std::string& key) {
  const std::string& s = attr(f, key);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw NtcError("", "attribute " + key + " is not an integer");
  return v;
}

void copy_param(const NtcFile& f, const std::string& name, Tensor& dst) {
  const Tensor& src = f.get(name);
  if (src.shape() != dst.shape())
    throw NtcError(name, "shape " + shape_string(src.shape()) + " does not match expected " + shape_string(dst.shape()));
  dst = src;
}

}  // namespace

NtcFile network_to_ntc(const nn::NetworkSpec& net) {
  net.validate();
  NtcFile f;
  f.attributes["kind"] = "network";
  f.attributes["branches"] = std::to_string(net.branches.size());
  f.attributes["head"] = net.fused() ? std::to_string(net.head.front().out) : "";
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const std::string p = "branch" + std::to_string(b);
    f.attributes[p + ".arch"] = nn::layer_string(net.branches[b]);
    f.attributes[p + ".input"] = shape_string(net.input_shapes[b]);
    f.attributes[p + ".replicas"] = std::to_string(net.replicas.empty() ? 1 : net.replicas[b]);
  }
  auto add = [&](const nn::LayerSeq& seq, const std::string& prefix) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (!seq[i].has_params()) continue;
      const std::string base = prefix + ".l" + std::to_string(i);
      f.tensors.push_back({base + ".weight", seq[i].weights});
      f.tensors.push_back({base + ".bias", seq[i].bias});
    }
  };
  for (std::size_t b = 0; b < net.branches.size(); ++b) add(net.branches[b], seq_prefix(b, false));
  add(net.head, seq_prefix(0, true));
  return f;
}

nn::NetworkSpec network_from_ntc(const NtcFile& f) {
  if (attr(f, "kind") != "network") throw NtcError("", "container does not hold a network");
  const std::size_t branches = attr_count(f, "branches");
  if (branches < 1 || branches > 2) throw NtcError("", "network must have one or two branches");

  nn::NetworkSpec net;
  try {
    if (branches == 1) {
      net = nn::make_network(attr(f, "branch0.arch"), parse_shape(attr(f, "branch0.input"), "branch0.input"),
                             attr_count(f, "branch0.replicas"));
    } else {
      std::vector<nn::BranchArch> archs;
      for (std::size_t b = 0; b < branches; ++b) {
        const std::string p = "branch" + std::to_string(b);
        archs.push_back({attr(f, p + ".arch"), parse_shape(attr(f, p + ".input"), p + ".input"),
                         attr_count(f, p + ".replicas")});
      }
      net = nn::make_fused(archs, attr_count(f, "head"));
    }
  } catch (const InvalidInput& e) {
    throw NtcError("", std::string("invalid architecture: ") + e.what());
  }

  auto fill = [&](nn::LayerSeq& seq, const std::string& prefix) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (!seq[i].has_params()) continue;
      const std::string base = prefix + ".l" + std::to_string(i);
      copy_param(f, base + ".weight", seq[i].weights);
      copy_param(f, base + ".bias", seq[i].bias);
    }
  };
  for (std::size_t b = 0; b < net.branches.size(); ++b) fill(net.branches[b], seq_prefix(b, false));
  fill(net.head, seq_prefix(0, true));
  return net;
}

void save_network(const nn::NetworkSpec& net, const std::filesystem::path& path) {
  save_ntc(network_to_ntc(net), path);
}

nn::NetworkSpec load_network(const std::filesystem::path& path) { return network_from_ntc(load_ntc(path)); }

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  NtcFile f;
  f.attributes["kind"] = "dataset";
  const std::size_t n = ds.size();
  Tensor labels({n}), session({n});
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<double>(ds.labels[i]);
    session[i] = static_cast<double>(ds.session[i]);
  }
  f.tensors = {{"emg", ds.emg}, {"images", ds.images}, {"labels", labels}, {"session", session}};
  save_ntc(f, path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const NtcFile f = load_ntc(path);
  if (f.attributes.count("kind") && f.attributes.at("kind") != "dataset")
    throw NtcError("", "container does not hold a dataset");
  Dataset ds;
  ds.emg = f.get("emg");
  ds.images = f.get("images");
  for (const char* name : {"labels", "session"}) {
    auto& dst = std::string(name) == "labels" ? ds.labels : ds.session;
    for (double v : f.get(name).values()) {
      if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw NtcError(name, "holds a non-integer index");
      dst.push_back(static_cast<std::size_t>(v));
    }
  }
  try {
    ds.validate();
  } catch (const InvalidInput& e) {
    throw NtcError("", std::string("invalid dataset: ") + e.what());
  }
  return ds;
}

}  // namespace xbar::data
