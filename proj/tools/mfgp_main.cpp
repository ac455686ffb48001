#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mfgp/cli.hpp"
#include "mfgp/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity operator-constrained GP inference"};
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration")
      ->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const mfgp::RunConfig config = mfgp::parse_config(config_path);
    mfgp::run(config);
  } catch (const mfgp::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const mfgp::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
