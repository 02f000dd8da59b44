#pragma once

#include <filesystem>

#include "xbar/benchdata/dataset.hpp"
#include "xbar/benchdata/ntc.hpp"
#include "xbar/nncore/network.hpp"

namespace xbar::data {

/// Stores the architecture in the manifest attributes and every weight and
/// bias as an f32 tensor named "<b0|b1|head>.l<index>.<weight|bias>".
NtcFile network_to_ntc(const nn::NetworkSpec& net);
nn::NetworkSpec network_from_ntc(const NtcFile& file);

void save_network(const nn::NetworkSpec& net, const std::filesystem::path& path);
nn::NetworkSpec load_network(const std::filesystem::path& path);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace xbar::data
