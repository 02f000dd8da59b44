#include "xbar/bench/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>

#include "xbar/bench/networks.hpp"
#include "xbar/bench/worker_pool.hpp"
#include "xbar/benchdata/model_io.hpp"
#include "xbar/benchdata/ntc.hpp"
#include "xbar/fxpquant/fixed_point.hpp"
#include "xbar/rng.hpp"

namespace xbar::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string num(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

data::Dataset load_dataset_artifact(const Layout& layout) {
  if (!fs::exists(layout.dataset()))
    throw MissingArtifact("dataset not found at " + layout.dataset().string() + "; run `xbar_bench gen-data` first");
  return data::load_dataset(layout.dataset());
}

nn::NetworkSpec load_model_artifact(const Layout& layout, const std::string& network, std::size_t fold) {
  const fs::path p = layout.model(network, fold);
  if (!fs::exists(p))
    throw MissingArtifact("model not found at " + p.string() + "; run `xbar_bench train` first");
  return data::load_network(p);
}

std::size_t trial_count(const RunConfig& cfg) {
  return cfg.networks.size() * cfg.sigmas.size() * cfg.seeds.size() * data::kSessions;
}

}  // namespace

fs::path Layout::model(const std::string& network, std::size_t fold) const {
  return root / "models" / (network + ".fold" + std::to_string(fold) + ".ntc");
}

data::Dataset make_dataset(const RunConfig& cfg) {
  return data::gen_synthetic(cfg.data.samples_per_class_session, cfg.data.seed, cfg.data.synth);
}

nn::TrainResult train_network(const RunConfig& cfg, const data::Dataset& ds, const std::string& network,
                              std::size_t fold) {
  const auto folds = data::cv_folds_by_session(ds);
  const auto train = network_examples(network, ds, folds.at(fold).train);
  nn::NetworkSpec net = make_benchmark_network(network, ds.image_size());
  const std::uint64_t key = stream_key(cfg.train.seed, network_index(network), fold);
  nn::init_params(net, key);
  nn::TrainConfig tc = cfg.train;
  tc.seed = key;
  return nn::train_sgd(std::move(net), train, tc);
}

std::vector<std::vector<Tensor>> calibration_inputs(const RunConfig& cfg, const data::Dataset& ds,
                                                    const std::string& network, std::size_t fold) {
  const auto folds = data::cv_folds_by_session(ds);
  const auto& train = folds.at(fold).train;
  const std::size_t n = std::min(cfg.calibration_samples, train.size());
  std::vector<std::vector<Tensor>> calib;
  calib.reserve(n);
  for (std::size_t k = 0; k < n; ++k) calib.push_back(network_inputs(network, ds, train[k * train.size() / n]));
  return calib;
}

mem::DeviceConfig trial_device(const RunConfig& cfg, const std::string& network, std::size_t fold, double sigma,
                               std::uint64_t seed) {
  mem::DeviceConfig dev = cfg.device;
  dev.sigma = sigma;
  dev.seed = stream_key(seed, network_index(network), fold);
  return dev;
}

double trial_accuracy(const RunConfig& cfg, const data::Dataset& ds, const nn::NetworkSpec& net,
                      const std::string& network, std::size_t fold, double sigma, std::uint64_t seed) {
  const auto calib = calibration_inputs(cfg, ds, network, fold);
  const mem::MappedNetwork mapped =
      mem::convert_network(net, trial_device(cfg, network, fold, sigma, seed), calib, cfg.conversion);
  const auto folds = data::cv_folds_by_session(ds);
  const auto& test = folds.at(fold).test;
  std::size_t correct = 0;
  for (std::size_t i : test) correct += mem::mapped_predict(mapped, network_inputs(network, ds, i)) == ds.labels[i];
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<ReportRow> sweep_rows(const RunConfig& cfg, const data::Dataset& ds, const ModelLookup& models,
                                  std::size_t threads) {
  std::map<std::string, cost::CostReport> costs;
  for (const auto& id : cfg.networks) costs[id] = cost::estimate(make_benchmark_network(id, ds.image_size()), cfg.cost);

  std::vector<ReportRow> rows(trial_count(cfg));
  const std::size_t per_net = cfg.sigmas.size() * cfg.seeds.size() * data::kSessions;
  parallel_for(rows.size(), threads, [&](std::size_t t) {
    const std::string& id = cfg.networks[t / per_net];
    std::size_t rest = t % per_net;
    const double sigma = cfg.sigmas[rest / (cfg.seeds.size() * data::kSessions)];
    rest %= cfg.seeds.size() * data::kSessions;
    const std::uint64_t seed = cfg.seeds[rest / data::kSessions];
    const std::size_t fold = rest % data::kSessions;

    ReportRow& r = rows[t];
    r.network = id;
    r.modality = to_string(network_info(id).modality);
    r.sigma = sigma;
    r.n_states = cfg.device.n_states;
    r.fold = fold;
    r.seed = seed;
    r.accuracy = trial_accuracy(cfg, ds, models(id, fold), id, fold, sigma, seed);
    const auto& c = costs.at(id);
    r.energy_j = c.energy_j;
    r.latency_s = c.latency_s;
    r.edp_js = c.edp_js;
  });
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

CostRow cost_row(const RunConfig& cfg, const std::string& network) {
  CostRow row;
  row.network = network;
  const nn::NetworkSpec net = make_benchmark_network(network, cfg.data.synth.image_size);
  row.report = cost::estimate(net, cfg.cost);
  // the conv input resolution behind the published energy is unknown
  bool has_conv = false;
  nn::for_each_layer(net, [&](const nn::LayerSpec& l) { has_conv = has_conv || l.kind == nn::LayerKind::conv2d; });
  row.band = has_conv ? 10.0 : 5.0;
  row.published = find_published("Memristive", network);
  if (row.published) {
    const double ms = row.report.latency_s * 1e3;
    row.latency_match = std::abs(ms - row.published->latency_ms) <= 1e-12 * row.published->latency_ms;
    row.energy_ratio = row.report.energy_j * 1e6 / row.published->energy_uj;
    row.within_band = row.energy_ratio >= 1.0 / row.band && row.energy_ratio <= row.band;
  }
  return row;
}

data::Dataset cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  data::Dataset ds = make_dataset(cfg);
  data::save_dataset(ds, layout.dataset());
  data::export_csv(ds, layout.dataset_csv());
  log << "wrote " << ds.size() << " samples (" << data::kClasses << " classes x " << data::kSessions
      << " sessions) to " << layout.dataset().string() << '\n';
  return ds;
}

void cmd_train(const RunConfig& cfg, std::size_t threads, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const data::Dataset ds = load_dataset_artifact(layout);
  const auto folds = data::cv_folds_by_session(ds);
  const std::size_t jobs = cfg.networks.size() * data::kSessions;

  struct Outcome {
    nn::TrainResult result;
    double test_accuracy = 0.0;
    std::vector<fxp::AccuracyDelta> fixed;
  };
  std::vector<Outcome> outcomes(jobs);
  parallel_for(jobs, threads, [&](std::size_t j) {
    const std::string& id = cfg.networks[j / data::kSessions];
    const std::size_t fold = j % data::kSessions;
    Outcome& o = outcomes[j];
    o.result = train_network(cfg, ds, id, fold);
    const auto test = network_examples(id, ds, folds[fold].test);
    o.test_accuracy = nn::accuracy(o.result.net, test);
    for (const auto& fmt : cfg.fixed_point) {
      const std::vector<fxp::FixedPointFormat> one{fmt};
      o.fixed.push_back(fxp::fx_accuracy_delta(o.result.net, fxp::quantize_network(o.result.net, one), test));
    }
    data::save_network(o.result.net, layout.model(id, fold));
  });

  std::ofstream tlog = open_out(layout.train_log());
  std::ofstream summary = open_out(layout.train_summary());
  tlog << "network,fold,epoch,loss,train_accuracy\n";
  summary << "network,fold,final_loss,train_accuracy,test_accuracy\n";
  std::ofstream fx;
  if (!cfg.fixed_point.empty()) {
    fx = open_out(layout.fixed_point());
    fx << "network,fold,word_length,fraction_length,acc_float,acc_fixed,delta\n";
  }
  for (std::size_t j = 0; j < jobs; ++j) {
    const std::string& id = cfg.networks[j / data::kSessions];
    const std::size_t fold = j % data::kSessions;
    const auto& o = outcomes[j];
    const auto& lg = o.result.log;
    for (std::size_t e = 0; e < lg.epoch_loss.size(); ++e)
      tlog << id << ',' << fold << ',' << e + 1 << ',' << num(lg.epoch_loss[e]) << ','
           << num(lg.epoch_accuracy[e]) << '\n';
    summary << id << ',' << fold << ',' << num(lg.epoch_loss.back()) << ',' << num(lg.epoch_accuracy.back()) << ','
            << num(o.test_accuracy) << '\n';
    for (std::size_t f = 0; f < o.fixed.size(); ++f)
      fx << id << ',' << fold << ',' << cfg.fixed_point[f].word_length << ',' << cfg.fixed_point[f].fraction_length
         << ',' << num(o.fixed[f].acc_float) << ',' << num(o.fixed[f].acc_fixed) << ',' << num(o.fixed[f].delta)
         << '\n';
    log << id << " fold " << fold << ": test accuracy " << num(o.test_accuracy, "%.4f") << " -> "
        << layout.model(id, fold).string() << '\n';
  }
}

void cmd_convert(const RunConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const data::Dataset ds = load_dataset_artifact(layout);
  const double sigma = cfg.sigmas.front();
  const std::uint64_t seed = cfg.seeds.front();
  json out = json::array();
  for (const auto& id : cfg.networks) {
    for (std::size_t fold = 0; fold < data::kSessions; ++fold) {
      const nn::NetworkSpec net = load_model_artifact(layout, id, fold);
      mem::ConversionSummary s;
      mem::convert_network(net, trial_device(cfg, id, fold, sigma, seed), calibration_inputs(cfg, ds, id, fold),
                           cfg.conversion, &s);
      json layers = json::array();
      for (const auto& l : s.layers)
        layers.push_back({{"name", l.name},
                          {"tiles", l.tiles},
                          {"clipped", l.clipped},
                          {"w_max", l.w_max},
                          {"tuning_a", l.tuning_a},
                          {"tuning_b", l.tuning_b},
                          {"degenerate", l.degenerate}});
      out.push_back({{"network", id},
                     {"fold", fold},
                     {"sigma", sigma},
                     {"seed", seed},
                     {"tiles_total", s.tiles_total},
                     {"clipped_total", s.clipped_total},
                     {"layers", layers}});
      log << id << " fold " << fold << ": " << s.tiles_total << " tiles, " << s.clipped_total
          << " clipped weights (sigma " << sigma << ", seed " << seed << ")\n";
    }
  }
  open_out(layout.convert_summary()) << out.dump(2) << '\n';
}

std::vector<ReportRow> cmd_sweep(const RunConfig& cfg, std::size_t threads, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const data::Dataset ds = load_dataset_artifact(layout);
  // load every model up front so a missing file fails before any work
  std::map<std::pair<std::string, std::size_t>, nn::NetworkSpec> models;
  for (const auto& id : cfg.networks)
    for (std::size_t fold = 0; fold < data::kSessions; ++fold) models[{id, fold}] = load_model_artifact(layout, id, fold);
  const auto rows = sweep_rows(
      cfg, ds, [&](const std::string& id, std::size_t fold) -> const nn::NetworkSpec& { return models.at({id, fold}); },
      threads);
  write_rows_csv(rows, layout.sweep_csv());
  write_rows_json(rows, layout.sweep_json());
  log << "wrote " << rows.size() << " rows to " << layout.sweep_csv().string() << '\n';
  return rows;
}

std::vector<CostRow> cmd_cost(const RunConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  std::vector<CostRow> rows;
  for (const auto& id : cfg.networks) rows.push_back(cost_row(cfg, id));

  std::ofstream csv = open_out(layout.cost_csv());
  csv << "network,latency_ms,published_latency_ms,latency_flag,energy_uj,published_energy_uj,energy_ratio,"
         "energy_flag,edp_ujs,published_edp_ujs,tiles,adcs,area_mm2,macs,citation\n";
  std::ofstream layers = open_out(layout.cost_layers_csv());
  layers << "network,layer,rows,physical_cols,dup,tiles,adcs,cells,replicas,energy_adc_j,energy_cells_j,area_mm2,macs\n";
  json j = json::array();
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-12s %-9s %-11s %-9s %-12s %-12s\n", "network", "latency_ms", "latency",
                "energy_uj", "ratio", "energy", "edp_ujs");
  log << line;
  for (const auto& r : rows) {
    const auto* p = r.published;
    const std::string lat_flag = p ? (r.latency_match ? "MATCH" : "MISMATCH") : "NO_REFERENCE";
    const std::string e_flag = p ? (r.within_band ? "WITHIN_BAND" : "OUTSIDE_BAND") : "NO_REFERENCE";
    const double ms = r.report.latency_s * 1e3, uj = r.report.energy_j * 1e6, edp = r.report.edp_js * 1e6;
    csv << r.network << ',' << num(ms) << ',' << (p ? num(p->latency_ms) : "") << ',' << lat_flag << ',' << num(uj)
        << ',' << (p ? num(p->energy_uj) : "") << ',' << (p ? num(r.energy_ratio) : "") << ',' << e_flag << ','
        << num(edp) << ',' << (p ? num(p->edp_ujs) : "") << ',' << r.report.tiles_total << ','
        << r.report.adc_count << ',' << num(r.report.area_mm2) << ',' << r.report.macs << ",\""
        << (p ? p->citation : "") << "\"\n";
    for (const auto& l : r.report.layers)
      layers << r.network << ',' << l.name << ',' << l.layout.rows << ',' << l.layout.physical_cols << ','
             << l.layout.dup << ',' << l.layout.tiles << ',' << l.layout.adc_count << ',' << l.layout.cells << ','
             << l.replicas << ',' << num(l.energy_adc_j) << ',' << num(l.energy_cells_j) << ',' << num(l.area_mm2)
             << ',' << l.macs << '\n';
    json e = {{"network", r.network},
              {"latency_ms", ms},
              {"latency_flag", lat_flag},
              {"energy_uj", uj},
              {"energy_flag", e_flag},
              {"energy_band", r.band},
              {"edp_ujs", edp},
              {"tiles", r.report.tiles_total},
              {"adcs", r.report.adc_count},
              {"area_mm2", r.report.area_mm2},
              {"macs", r.report.macs}};
    if (p) {
      e["published"] = {{"latency_ms", p->latency_ms},
                        {"energy_uj", p->energy_uj},
                        {"edp_ujs", p->edp_ujs},
                        {"citation", p->citation}};
      e["energy_ratio"] = r.energy_ratio;
    }
    j.push_back(e);
    std::snprintf(line, sizeof line, "%-10s %-12s %-9s %-11s %-9s %-12s %-12s\n", r.network.c_str(), num(ms).c_str(),
                  lat_flag.c_str(), num(uj, "%.4g").c_str(), p ? num(r.energy_ratio, "%.3f").c_str() : "-",
                  e_flag.c_str(), num(edp, "%.3g").c_str());
    log << line;
  }
  open_out(layout.cost_json()) << j.dump(2) << '\n';
  return rows;
}

std::vector<TrendVerdict> cmd_report(const RunConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const auto rows = read_rows_csv(layout.sweep_csv());
  const auto verdicts = analyze_trend(rows);
  write_report(verdicts, layout.root);
  log << format_report(verdicts);
  return verdicts;
}

}  // namespace xbar::bench
