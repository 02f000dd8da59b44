#include "xbar/bench/networks.hpp"

#include <algorithm>

#include "xbar/errors.hpp"
#include "xbar/nncore/arch.hpp"

namespace xbar::bench {

namespace {

constexpr const char* kEmgMlp = "16-230-5";
constexpr const char* kApsCnn = "8c3-2p-16c3-2p-32c3-512-5";
constexpr const char* kApsMlp = "400-210-5";
constexpr std::size_t kApsMlpReplicas = 4;

}  // namespace

std::string to_string(Modality m) {
  switch (m) {
    case Modality::emg:
      return "EMG";
    case Modality::aps:
      return "APS";
    case Modality::emg_aps:
      return "EMG+APS";
  }
  return "?";
}

const std::vector<NetworkInfo>& network_registry() {
  static const std::vector<NetworkInfo> registry{
      {"mlp_emg_a", "16-128-128-5 MLP", Modality::emg},
      {"mlp_emg_b", "16-230-5 MLP", Modality::emg},
      {"cnn_aps", "8c3-2p-16c3-2p-32c3-512-5 CNN", Modality::aps},
      {"mlp_aps", "4 x 400-210-5 MLP", Modality::aps},
      {"fused_cnn", "16-230-5 MLP + CNN, 5-neuron fusion", Modality::emg_aps},
      {"fused_mlp", "16-230-5 MLP + 4 x 400-210-5 MLP, 5-neuron fusion", Modality::emg_aps},
  };
  return registry;
}

std::size_t network_index(const std::string& id) {
  const auto& reg = network_registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const NetworkInfo& n) { return n.id == id; });
  if (it == reg.end()) {
    std::string known;
    for (const auto& n : reg) known += (known.empty() ? "" : ", ") + n.id;
    throw InvalidInput("unknown network '" + id + "' (known: " + known + ")");
  }
  return static_cast<std::size_t>(it - reg.begin());
}

const NetworkInfo& network_info(const std::string& id) { return network_registry()[network_index(id)]; }

nn::NetworkSpec make_benchmark_network(const std::string& id, std::size_t image_size) {
  const Shape frame{1, image_size, image_size};
  switch (network_index(id)) {
    case 0:
      return nn::make_network("16-128-128-5");
    case 1:
      return nn::make_network(kEmgMlp);
    case 2:
      return nn::make_network(kApsCnn, frame);
    case 3:
      return nn::make_network(kApsMlp, {}, kApsMlpReplicas);
    case 4:
      return nn::make_fused({{kEmgMlp, {}, 1}, {kApsCnn, frame, 1}}, data::kClasses);
    default:
      return nn::make_fused({{kEmgMlp, {}, 1}, {kApsMlp, {}, kApsMlpReplicas}}, data::kClasses);
  }
}

std::vector<Tensor> network_inputs(const std::string& id, const data::Dataset& ds, std::size_t i) {
  switch (network_index(id)) {
    case 0:
    case 1:
      return {ds.emg_sample(i)};
    case 2:
      return {ds.image_sample(i)};
    case 3:
      return {ds.image_crop(i)};
    case 4:
      return {ds.emg_sample(i), ds.image_sample(i)};
    default:
      return {ds.emg_sample(i), ds.image_crop(i)};
  }
}

std::vector<nn::Example> network_examples(const std::string& id, const data::Dataset& ds,
                                          const std::vector<std::size_t>& indices) {
  std::vector<nn::Example> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back({network_inputs(id, ds, i), ds.labels.at(i)});
  return out;
}

}  // namespace xbar::bench
