// Command-line driver for the crossbar benchmark pipeline.

#include <CLI11.hpp>
#include <iostream>

#include "xbar/bench/commands.hpp"
#include "xbar/bench/worker_pool.hpp"
#include "xbar/benchdata/ntc.hpp"

namespace {

enum Exit : int { ok = 0, failure = 1, config_error = 2, missing_artifact = 3, numeric_fault = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace xbar::bench;

  CLI::App app{"Memristive crossbar inference benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  std::size_t threads = 0;
  app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)");
  app.add_option("--out-dir", out_dir, "Override the configured output directory");
  app.add_option("--seeds", seeds, "Override the seed list, e.g. 0-9 or 1,4,7");
  app.add_option("--threads", threads, "Worker threads (else XBAR_BENCH_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen-data", "Generate the synthetic two-modality dataset"},
      {"train", "Train every configured network on each cross-validation fold"},
      {"convert", "Map trained networks onto crossbars and summarize tiles and clipping"},
      {"sweep", "Accuracy over the sigma grid, seeds and folds"},
      {"cost", "Latency, energy, EDP and area against the published memristive rows"},
      {"report", "Trend summary and plot data from the sweep table"},
      {"dump-config", "Print the effective configuration"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    if (threads > 0) cfg.threads = threads;
    cfg.validate();
    const std::size_t workers = resolve_threads(cfg.threads);

    if (command == "gen-data") {
      cmd_gen_data(cfg, std::cout);
    } else if (command == "train") {
      cmd_train(cfg, workers, std::cout);
    } else if (command == "convert") {
      cmd_convert(cfg, std::cout);
    } else if (command == "sweep") {
      cmd_sweep(cfg, workers, std::cout);
    } else if (command == "cost") {
      cmd_cost(cfg, std::cout);
    } else if (command == "report") {
      cmd_report(cfg, std::cout);
    } else {
      std::cout << dump_config(cfg) << '\n';
    }
    return Exit::ok;
  } catch (const xbar::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return Exit::missing_artifact;
  } catch (const xbar::data::NtcError& e) {
    std::cerr << "unreadable artifact: " << e.what() << '\n';
    return Exit::missing_artifact;
  } catch (const xbar::NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return Exit::numeric_fault;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::failure;
  }
}
