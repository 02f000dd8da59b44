#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "xbar/tensor.hpp"

namespace xbar::data {

/// NTC container: a UTF-8 JSON manifest at `path` plus a raw blob at
/// `path` + ".bin". The manifest lists every tensor as
/// {name, dtype: "f32", shape, byte_offset, byte_length}; the blob holds
/// little-endian IEEE-754 binary32 values at 8-byte aligned offsets.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct NtcFile {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> attributes;

  const Tensor& get(const std::string& name) const;
  const Tensor* find(const std::string& name) const;
};

/// Structured load failure. `tensor()` names the offending tensor, or is
/// empty when the problem is container-wide.
class NtcError : public std::runtime_error {
 public:
  NtcError(std::string tensor, const std::string& message);
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

std::filesystem::path ntc_blob_path(const std::filesystem::path& manifest);

void save_ntc(const NtcFile& file, const std::filesystem::path& path);

/// Validates the whole manifest against the blob before returning anything.
NtcFile load_ntc(const std::filesystem::path& path);

}  // namespace xbar::data
