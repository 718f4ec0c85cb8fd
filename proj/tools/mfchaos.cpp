// mfchaos: run propagation-of-chaos experiments from an INI config.
#include <CLI11.hpp>
#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mfchaos/runner.hpp"

using namespace mfchaos;

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("config error at {}", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("mfchaos"));
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  CLI::App app{"Propagation of chaos experiments for Vlasov-type particle systems"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);

  std::string selftest_config;
  auto* selftest = app.add_subcommand("selftest", "fast correctness checks; exit 2 if any threshold is violated");
  selftest->add_option("config", selftest_config, "optional INI config (default: built-in)")->check(CLI::ExistingFile);

  auto* schema = app.add_subcommand("print-schema", "list every config key with its type and default");

  CLI11_PARSE(app, argc, argv);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  if (*schema) {
    std::cout << schema_text();
    return kExitOk;
  }
  if (*run) {
    return guarded([&] { return run_experiment(load_config(config_path)).exit_code; });
  }
  return guarded([&] {
    RunConfig cfg = selftest_config.empty() ? parse_config_text(default_selftest_config()) : load_config(selftest_config);
    cfg.experiment = "selftest";
    return run_experiment(cfg).exit_code;
  });
}
