#include "xbar/bench/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <tuple>

#include "xbar/bench/config.hpp"
#include "xbar/errors.hpp"

namespace xbar::bench {

namespace {

constexpr const char* kHeader = "network,modality,sigma,n_states,fold,seed,accuracy,energy_j,latency_s,edp_js";

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename T>
T parse_number(std::string_view s, const std::string& what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw InvalidInput(what + ": cannot parse '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) return out;
    line.remove_prefix(comma + 1);
  }
}

void open_for_write(std::ofstream& out, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out.open(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

bool row_less(const ReportRow& a, const ReportRow& b) {
  return std::tie(a.network, a.sigma, a.seed, a.fold) < std::tie(b.network, b.sigma, b.seed, b.fold);
}

void write_rows_csv(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  std::ofstream out;
  open_for_write(out, path);
  out << kHeader << '\n';
  for (const auto& r : rows) {
    out << r.network << ',' << r.modality << ',' << shortest(r.sigma) << ','
        << (r.n_states ? std::to_string(*r.n_states) : std::string("inf")) << ',' << r.fold << ',' << r.seed << ','
        << shortest(r.accuracy) << ',' << shortest(r.energy_j) << ',' << shortest(r.latency_s) << ','
        << shortest(r.edp_js) << '\n';
  }
}

void write_rows_json(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"network", r.network},
                 {"modality", r.modality},
                 {"sigma", r.sigma},
                 {"n_states", r.n_states ? nlohmann::json(*r.n_states) : nlohmann::json("inf")},
                 {"fold", r.fold},
                 {"seed", r.seed},
                 {"accuracy", r.accuracy},
                 {"energy_j", r.energy_j},
                 {"latency_s", r.latency_s},
                 {"edp_js", r.edp_js}});
  }
  std::ofstream out;
  open_for_write(out, path);
  out << j.dump(2) << '\n';
}

std::vector<ReportRow> read_rows_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("sweep table not found at " + path.string() + "; run `xbar_bench sweep` first");
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw InvalidInput(path.string() + ": unexpected header");
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split(line);
    if (f.size() != 10) throw InvalidInput(where + ": expected 10 fields");
    ReportRow r;
    r.network = f[0];
    r.modality = f[1];
    r.sigma = parse_number<double>(f[2], where);
    if (f[3] != "inf") r.n_states = parse_number<std::size_t>(f[3], where);
    r.fold = parse_number<std::size_t>(f[4], where);
    r.seed = parse_number<std::uint64_t>(f[5], where);
    r.accuracy = parse_number<double>(f[6], where);
    r.energy_j = parse_number<double>(f[7], where);
    r.latency_s = parse_number<double>(f[8], where);
    r.edp_js = parse_number<double>(f[9], where);
    if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) throw InvalidInput(where + ": accuracy outside [0, 1]");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TrendVerdict> analyze_trend(std::span<const ReportRow> rows, double min_drop) {
  if (rows.empty()) throw InvalidInput("trend analysis needs at least one sweep row");
  std::vector<ReportRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), row_less);

  // network -> sigma -> seed -> fold accuracies
  std::map<std::string, std::map<double, std::map<std::uint64_t, std::vector<double>>>> table;
  std::vector<std::string> order;
  std::map<std::string, std::string> modality;
  for (const auto& r : sorted) {
    if (!table.count(r.network)) order.push_back(r.network);
    table[r.network][r.sigma][r.seed].push_back(r.accuracy);
    modality[r.network] = r.modality;
  }

  std::vector<TrendVerdict> out;
  for (const auto& net : order) {
    TrendVerdict v;
    v.network = net;
    v.modality = modality[net];
    std::vector<std::map<std::uint64_t, double>> per_seed;
    for (const auto& [sigma, seeds] : table[net]) {
      std::map<std::uint64_t, double> fold_means;
      std::vector<double> values;
      for (const auto& [seed, accs] : seeds) {
        fold_means[seed] = mean_of(accs);
        values.push_back(fold_means[seed]);
      }
      SweepPoint p;
      p.sigma = sigma;
      p.seeds = values.size();
      p.mean = mean_of(values);
      p.std = sample_std(values);
      p.se = p.std / std::sqrt(static_cast<double>(values.size()));
      v.points.push_back(p);
      per_seed.push_back(std::move(fold_means));
    }
    for (std::size_t i = 0; i + 1 < per_seed.size(); ++i) {
      std::vector<double> diffs;
      for (const auto& [seed, m] : per_seed[i + 1])
        if (auto it = per_seed[i].find(seed); it != per_seed[i].end()) diffs.push_back(m - it->second);
      SweepStep s;
      if (diffs.empty()) {
        // no common seeds: fall back to the unpaired standard error
        s.change = v.points[i + 1].mean - v.points[i].mean;
        s.allowance = std::hypot(v.points[i].se, v.points[i + 1].se);
      } else {
        s.change = mean_of(diffs);
        s.allowance = sample_std(diffs) / std::sqrt(static_cast<double>(diffs.size()));
      }
      s.ok = s.change <= s.allowance;
      v.monotone = v.monotone && s.ok;
      v.steps.push_back(s);
    }
    v.drop = v.points.front().mean - v.points.back().mean;
    v.drop_ok = v.points.size() > 1 && v.drop >= min_drop;
    out.push_back(std::move(v));
  }
  return out;
}

std::string format_report(std::span<const TrendVerdict> verdicts) {
  std::ostringstream os;
  os << "accuracy versus device variability (mean over seeds of the 3-fold mean)\n";
  for (const auto& v : verdicts) {
    os << "\nnetwork " << v.network << " (" << v.modality << ")\n";
    os << "  sigma    mean     std      se       seeds  step     allowance\n";
    for (std::size_t i = 0; i < v.points.size(); ++i) {
      const auto& p = v.points[i];
      char line[160];
      std::snprintf(line, sizeof line, "  %-8s %-8s %-8s %-8s %-6zu", shortest(p.sigma).c_str(), fixed(p.mean, 4).c_str(),
                    fixed(p.std, 4).c_str(), fixed(p.se, 4).c_str(), p.seeds);
      os << line;
      if (i > 0) {
        const auto& s = v.steps[i - 1];
        os << ' ' << (s.change >= 0 ? "+" : "") << fixed(s.change, 4) << "  " << fixed(s.allowance, 4)
           << (s.ok ? "" : "  VIOLATION");
      }
      os << '\n';
    }
    os << "  trend: " << (v.monotone ? "MONOTONE" : "NOT_MONOTONE") << "; drop " << shortest(v.points.front().sigma)
       << " -> " << shortest(v.points.back().sigma) << ": " << fixed(100.0 * v.drop, 2) << " pp"
       << (v.drop_ok ? "" : " (below threshold)") << "; verdict " << (v.pass() ? "PASS" : "FAIL") << '\n';
  }
  return os.str();
}

void write_report(std::span<const TrendVerdict> verdicts, const std::filesystem::path& dir) {
  std::ofstream report;
  open_for_write(report, dir / "report.txt");
  report << format_report(verdicts);
  for (const auto& v : verdicts) {
    std::ofstream mean, sd;
    open_for_write(mean, dir / ("fig7_" + v.network + ".tsv"));
    open_for_write(sd, dir / ("fig7_" + v.network + "_std.tsv"));
    for (const auto& p : v.points) {
      mean << shortest(p.sigma) << '\t' << fixed(p.mean, 6) << '\n';
      sd << shortest(p.sigma) << '\t' << fixed(p.std, 6) << '\n';
    }
  }
}

}  // namespace xbar::bench
