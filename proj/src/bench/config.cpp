#include "xbar/bench/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <type_traits>

#include "xbar/bench/networks.hpp"

namespace xbar::bench {

using nlohmann::json;

namespace {

/// Reads fields from one JSON object and rejects whatever was not read.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && !v.is_number_unsigned()) throw ConfigError(path(key) + ": must be >= 0");
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  /// Sub-object, or nullptr when absent.
  const json* object(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path(key) + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

mem::AdcMode parse_adc_mode(const std::string& s, const std::string& where) {
  if (s == "per_pair_differential") return mem::AdcMode::per_pair_differential;
  if (s == "per_column") return mem::AdcMode::per_column;
  throw ConfigError(where + ": adc_mode must be per_pair_differential or per_column, got '" + s + "'");
}

std::string adc_mode_name(mem::AdcMode m) {
  return m == mem::AdcMode::per_column ? "per_column" : "per_pair_differential";
}

void read_data(const json& j, DataConfig& d) {
  Fields f(j, "data");
  f.get("samples_per_class_session", d.samples_per_class_session);
  f.get("seed", d.seed);
  f.get("emg_scale", d.synth.emg_scale);
  f.get("emg_std", d.synth.emg_std);
  f.get("session_shift_std", d.synth.session_shift_std);
  f.get("pixel_noise", d.synth.pixel_noise);
  f.get("image_size", d.synth.image_size);
  f.finish();
}

void read_train(const json& j, nn::TrainConfig& t) {
  Fields f(j, "train");
  f.get("learning_rate", t.learning_rate);
  f.get("epochs", t.epochs);
  f.get("batch_size", t.batch_size);
  f.get("seed", t.seed);
  f.get("dropout_rate", t.dropout_rate);
  f.finish();
}

void read_device(const json& j, mem::DeviceConfig& d) {
  Fields f(j, "device");
  f.get("r_on_mean", d.r_on_mean);
  f.get("r_off_mean", d.r_off_mean);
  f.get("positivity_floor", d.positivity_floor);
  if (const json* n = f.object("n_states")) {
    if (n->is_null()) {
      d.n_states = std::nullopt;
    } else if (n->is_number_unsigned()) {
      d.n_states = n->get<std::size_t>();
    } else {
      throw ConfigError("device.n_states: expected a positive integer or null");
    }
  }
  f.finish();
}

void read_conversion(const json& j, mem::ConversionOptions& c) {
  Fields f(j, "conversion");
  f.get("v_read", c.v_read);
  f.get("adc_bits", c.adc_bits);
  f.get("adc_enabled", c.adc_enabled);
  std::string mode = adc_mode_name(c.adc_mode);
  f.get("adc_mode", mode);
  c.adc_mode = parse_adc_mode(mode, "conversion");
  f.finish();
}

void read_cost(const json& j, cost::CostParams& p) {
  Fields f(j, "cost");
  f.get("v_read", p.v_read);
  f.get("i_cell_max", p.i_cell_max);
  f.get("tile_rows", p.tile_rows);
  f.get("tile_cols", p.tile_cols);
  f.get("cell_bits", p.cell_bits);
  f.get("resistance_ratio", p.resistance_ratio);
  f.get("p_adc", p.p_adc);
  f.get("f_adc_nominal", p.f_adc_nominal);
  f.get("f_adc_bitserial", p.f_adc_bitserial);
  f.get("a_adc", p.a_adc);
  f.get("a_cell", p.a_cell);
  f.get("array_utilization", p.array_utilization);
  std::string mode = p.adc_mode == cost::AdcMode::per_column ? "per_column" : "per_pair_differential";
  f.get("adc_mode", mode);
  p.adc_mode = parse_adc_mode(mode, "cost") == mem::AdcMode::per_column ? cost::AdcMode::per_column
                                                                         : cost::AdcMode::per_pair_differential;
  f.finish();
}

template <typename Fn>
void rethrow_as_config(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (networks.empty()) throw ConfigError("networks: at least one network is required");
  std::set<std::string> unique;
  for (const auto& id : networks) {
    rethrow_as_config("networks", [&] { network_info(id); });
    if (!unique.insert(id).second) throw ConfigError("networks: '" + id + "' listed twice");
  }
  if (data.samples_per_class_session == 0) throw ConfigError("data.samples_per_class_session must be >= 1");
  if (data.synth.image_size < data::kCropSize) throw ConfigError("data.image_size must be >= 20");
  for (double v : {data.synth.emg_scale, data.synth.emg_std, data.synth.session_shift_std, data.synth.pixel_noise})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("data: noise and scale values must be finite and >= 0");
  rethrow_as_config("train", [&] { train.validate(); });
  rethrow_as_config("device", [&] { device.validate(); });
  if (!(conversion.v_read > 0.0)) throw ConfigError("conversion.v_read must be > 0");
  if (conversion.adc_bits < 1 || conversion.adc_bits > 24) throw ConfigError("conversion.adc_bits must lie in [1, 24]");
  if (sigmas.empty()) throw ConfigError("sigmas: at least one value is required");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= 0.0) || !std::isfinite(sigmas[i])) throw ConfigError("sigmas: values must be finite and >= 0");
    if (i > 0 && !(sigmas[i] > sigmas[i - 1])) throw ConfigError("sigmas: values must be strictly increasing");
  }
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds: duplicate seed");
  if (calibration_samples < 2) throw ConfigError("calibration_samples must be >= 2");
  rethrow_as_config("cost", [&] { cost.validate(); });
  for (const auto& f : fixed_point) rethrow_as_config("fixed_point", [&] { f.validate(); });
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (threads && *threads == 0) throw ConfigError("threads must be >= 1");
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Fields f(j, "");
  f.get("networks", cfg.networks);
  f.get("sigmas", cfg.sigmas);
  if (const json* seeds = f.object("seeds")) {
    if (!seeds->is_array()) throw ConfigError("seeds: expected an array of nonnegative integers");
    cfg.seeds.clear();
    for (const auto& s : *seeds) {
      if (!s.is_number_unsigned()) throw ConfigError("seeds: expected an array of nonnegative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  f.get("calibration_samples", cfg.calibration_samples);
  std::string out = cfg.out_dir.string();
  f.get("out_dir", out);
  cfg.out_dir = out;
  if (const json* t = f.object("threads")) {
    if (!t->is_number_unsigned()) throw ConfigError("threads: expected a positive integer");
    cfg.threads = t->get<std::size_t>();
  }
  if (const json* d = f.object("data")) read_data(*d, cfg.data);
  if (const json* t = f.object("train")) read_train(*t, cfg.train);
  if (const json* d = f.object("device")) read_device(*d, cfg.device);
  if (const json* c = f.object("conversion")) read_conversion(*c, cfg.conversion);
  if (const json* c = f.object("cost")) read_cost(*c, cfg.cost);
  if (const json* fx = f.object("fixed_point")) {
    if (!fx->is_array()) throw ConfigError("fixed_point: expected an array");
    for (std::size_t i = 0; i < fx->size(); ++i) {
      Fields ff((*fx)[i], "fixed_point[" + std::to_string(i) + "]");
      fxp::FixedPointFormat fmt;
      ff.get("word_length", fmt.word_length);
      ff.get("fraction_length", fmt.fraction_length);
      ff.finish();
      cfg.fixed_point.push_back(fmt);
    }
  }
  f.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("config file not found: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["networks"] = cfg.networks;
  j["sigmas"] = cfg.sigmas;
  j["seeds"] = cfg.seeds;
  j["calibration_samples"] = cfg.calibration_samples;
  j["out_dir"] = cfg.out_dir.string();
  if (cfg.threads) j["threads"] = *cfg.threads;
  const auto& s = cfg.data.synth;
  j["data"] = {{"samples_per_class_session", cfg.data.samples_per_class_session},
               {"seed", cfg.data.seed},
               {"emg_scale", s.emg_scale},
               {"emg_std", s.emg_std},
               {"session_shift_std", s.session_shift_std},
               {"pixel_noise", s.pixel_noise},
               {"image_size", s.image_size}};
  const auto& t = cfg.train;
  j["train"] = {{"learning_rate", t.learning_rate},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"seed", t.seed},
                {"dropout_rate", t.dropout_rate}};
  const auto& d = cfg.device;
  j["device"] = {{"r_on_mean", d.r_on_mean}, {"r_off_mean", d.r_off_mean}, {"positivity_floor", d.positivity_floor}};
  j["device"]["n_states"] = d.n_states ? json(*d.n_states) : json(nullptr);
  const auto& c = cfg.conversion;
  j["conversion"] = {{"v_read", c.v_read},
                     {"adc_bits", c.adc_bits},
                     {"adc_enabled", c.adc_enabled},
                     {"adc_mode", adc_mode_name(c.adc_mode)}};
  const auto& p = cfg.cost;
  j["cost"] = {{"v_read", p.v_read},
               {"i_cell_max", p.i_cell_max},
               {"tile_rows", p.tile_rows},
               {"tile_cols", p.tile_cols},
               {"cell_bits", p.cell_bits},
               {"resistance_ratio", p.resistance_ratio},
               {"p_adc", p.p_adc},
               {"f_adc_nominal", p.f_adc_nominal},
               {"f_adc_bitserial", p.f_adc_bitserial},
               {"a_adc", p.a_adc},
               {"a_cell", p.a_cell},
               {"array_utilization", p.array_utilization},
               {"adc_mode", p.adc_mode == cost::AdcMode::per_column ? "per_column" : "per_pair_differential"}};
  j["fixed_point"] = json::array();
  for (const auto& f : cfg.fixed_point)
    j["fixed_point"].push_back({{"word_length", f.word_length}, {"fraction_length", f.fraction_length}});
  return j.dump(2);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError("seed list '" + text + "': '" + std::string(s) + "' is not a nonnegative integer");
    return v;
  };
  std::vector<std::uint64_t> seeds;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(number(item));
    } else {
      const std::uint64_t lo = number(item.substr(0, dash)), hi = number(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("seed list '" + text + "': empty range");
      if (hi - lo > 100000) throw ConfigError("seed list '" + text + "': range too large");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return seeds;
}

}  // namespace xbar::bench
