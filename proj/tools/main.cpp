#include "commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

using namespace carpetq;
using namespace carpetq::cli;

int main(int argc, char** argv) {
  CLI::App app{"Bedford-McMullen carpet measures: partitions, antichains, entropy sequences "
               "and quantization diagnostics"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  std::size_t cap_words = 0;
  unsigned threads = 0;
  for (const char* name : {"validate", "partition", "antichain", "sequences", "quantize", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: config output_dir or ./out)");
    sub->add_option("--cap-words", cap_words, "maximum words held in memory per level")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  CommandResult result;
  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (cap_words > 0) cfg.cap_words = cap_words;
    cfg.threads = threads;
    const auto t0 = std::chrono::steady_clock::now();
    result = run_command(command, cfg, std::cout);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& f : result.written) std::cout << "wrote " << (cfg.output_dir / f).string() << "\n";
    std::cout << command << " finished in " << secs << " s\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error" << (e.field().empty() ? "" : " [" + e.field() + "]") << ": "
              << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    for (const auto& issue : e.report().errors) {
      std::cerr << "validation error [" << issue.invariant << "]: " << issue.message << "\n";
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << command << " error: " << e.what() << "\n";
    return 2;
  }
  if (!result.ok()) {
    std::cerr << failures_json(result) << "\n";
    return 1;
  }
  return 0;
}
