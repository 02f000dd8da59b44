#include "xbar/benchdata/ntc.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <set>

namespace xbar::data {

using nlohmann::json;

namespace {

constexpr std::size_t kAlign = 8;

std::size_t align_up(std::size_t n) { return (n + kAlign - 1) / kAlign * kAlign; }

void put_f32(std::vector<char>& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

NtcError::NtcError(std::string tensor, const std::string& message)
    : std::runtime_error(tensor.empty() ? message : "tensor '" + tensor + "': " + message), tensor_(std::move(tensor)) {}

const Tensor* NtcFile::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

const Tensor& NtcFile::get(const std::string& name) const {
  if (const Tensor* t = find(name)) return *t;
  throw NtcError(name, "not present in container");
}

std::filesystem::path ntc_blob_path(const std::filesystem::path& manifest) {
  return std::filesystem::path(manifest.string() + ".bin");
}

void save_ntc(const NtcFile& file, const std::filesystem::path& path) {
  std::set<std::string> names;
  json manifest;
  manifest["format"] = "ntc";
  manifest["version"] = 1;
  manifest["blob"] = ntc_blob_path(path).filename().string();
  manifest["attributes"] = file.attributes;
  manifest["tensors"] = json::array();
  std::vector<char> blob;
  for (const auto& nt : file.tensors) {
    if (!names.insert(nt.name).second) throw NtcError(nt.name, "duplicate tensor name");
    blob.resize(align_up(blob.size()), '\0');
    const std::size_t offset = blob.size();
    for (double v : nt.tensor.values()) put_f32(blob, v);
    manifest["tensors"].push_back({{"name", nt.name},
                                   {"dtype", "f32"},
                                   {"shape", nt.tensor.shape()},
                                   {"byte_offset", offset},
                                   {"byte_length", blob.size() - offset}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream m(path, std::ios::binary);
  if (!m) throw NtcError("", "cannot write manifest " + path.string());
  m << manifest.dump(2) << '\n';
  std::ofstream b(ntc_blob_path(path), std::ios::binary);
  if (!b) throw NtcError("", "cannot write blob " + ntc_blob_path(path).string());
  b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

NtcFile load_ntc(const std::filesystem::path& path) {
  std::ifstream m(path, std::ios::binary);
  if (!m) throw NtcError("", "cannot open manifest " + path.string());
  json manifest;
  try {
    manifest = json::parse(m);
  } catch (const json::exception& e) {
    throw NtcError("", std::string("malformed manifest: ") + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "ntc" || !manifest.contains("tensors") ||
      !manifest["tensors"].is_array())
    throw NtcError("", "malformed manifest: expected an ntc object with a tensors array");

  const auto blob_path = path.parent_path() / manifest.value("blob", ntc_blob_path(path).filename().string());
  std::ifstream b(blob_path, std::ios::binary);
  if (!b) throw NtcError("", "cannot open blob " + blob_path.string());
  const std::vector<char> blob((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());

  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset, length;
  };
  std::vector<Entry> entries;
  std::set<std::string> names;
  for (const auto& t : manifest["tensors"]) {
    std::string name = t.is_object() && t.contains("name") && t["name"].is_string() ? t["name"].get<std::string>() : "";
    if (name.empty()) throw NtcError("", "malformed manifest: tensor entry without a name");
    try {
      const std::string dtype = t.at("dtype").get<std::string>();
      if (dtype != "f32") throw NtcError(name, "dtype '" + dtype + "' is not f32");
      Entry e{name, t.at("shape").get<Shape>(), t.at("byte_offset").get<std::size_t>(),
              t.at("byte_length").get<std::size_t>()};
      if (e.length != shape_size(e.shape) * 4)
        throw NtcError(name, "byte_length " + std::to_string(e.length) + " does not match shape " +
                                 shape_string(e.shape) + " (" + std::to_string(shape_size(e.shape) * 4) + " bytes)");
      if (e.offset % kAlign != 0) throw NtcError(name, "byte_offset " + std::to_string(e.offset) + " is not 8-byte aligned");
      if (e.offset + e.length > blob.size())
        throw NtcError(name, "needs " + std::to_string(e.offset + e.length) + " blob bytes but blob has " +
                                 std::to_string(blob.size()));
      if (!names.insert(name).second) throw NtcError(name, "duplicate tensor name");
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw NtcError(name, std::string("malformed entry: ") + ex.what());
    }
  }

  std::vector<const Entry*> by_offset;
  for (const auto& e : entries) by_offset.push_back(&e);
  std::sort(by_offset.begin(), by_offset.end(), [](const Entry* a, const Entry* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < by_offset.size(); ++i)
    if (by_offset[i - 1]->offset + by_offset[i - 1]->length > by_offset[i]->offset && by_offset[i]->length > 0)
      throw NtcError(by_offset[i]->name, "overlaps tensor '" + by_offset[i - 1]->name + "'");

  NtcFile file;
  if (manifest.contains("attributes")) {
    try {
      file.attributes = manifest["attributes"].get<std::map<std::string, std::string>>();
    } catch (const json::exception& ex) {
      throw NtcError("", std::string("malformed attributes: ") + ex.what());
    }
  }
  for (const auto& e : entries) {
    std::vector<double> values(shape_size(e.shape));
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = get_f32(blob.data() + e.offset + 4 * k);
    file.tensors.push_back({e.name, Tensor(e.shape, std::move(values))});
  }
  return file;
}

}  // namespace xbar::data
