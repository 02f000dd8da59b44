#pragma once

#include <string>
#include <vector>

#include "xbar/benchdata/dataset.hpp"
#include "xbar/nncore/network.hpp"
#include "xbar/nncore/train.hpp"

namespace xbar::bench {

enum class Modality { emg, aps, emg_aps };

std::string to_string(Modality m);

/// One benchmark network of the comparison table.
struct NetworkInfo {
  std::string id;
  std::string description;
  Modality modality;
};

/// Registry order is part of the trial seed derivation; append only.
const std::vector<NetworkInfo>& network_registry();

/// Throws InvalidInput for an unknown id.
const NetworkInfo& network_info(const std::string& id);
std::size_t network_index(const std::string& id);

/// Untrained network for `id`; image branches see image_size x image_size
/// frames except mlp_aps, which sees the flattened centre crop.
nn::NetworkSpec make_benchmark_network(const std::string& id, std::size_t image_size = 32);

/// Per-branch input tensors of dataset sample i for network `id`.
std::vector<Tensor> network_inputs(const std::string& id, const data::Dataset& ds, std::size_t i);

std::vector<nn::Example> network_examples(const std::string& id, const data::Dataset& ds,
                                          const std::vector<std::size_t>& indices);

}  // namespace xbar::bench
