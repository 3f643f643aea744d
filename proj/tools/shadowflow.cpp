// shadowflow <command> --config <path> [--out <dir>]

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "shadowflow/config.hpp"
#include "shadowflow/runner.hpp"

int main(int argc, char** argv) {
  using namespace shadowflow;
  CLI::App app{"shadowflow: extended-system dynamics, closed-form oracles and magnetic spectra"};
  app.set_version_flag("--version", std::string("shadowflow ") + cli::kVersion + "\nconvention " + cli::kConvention);
  std::string command, config_path, out_dir;
  app.add_option("command", command, "simulate | oracle | sweep | spectrum | fig1")
      ->required()
      ->check(CLI::IsMember(cli::commands()));
  app.add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::ifstream in(config_path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  config::ExperimentConfig cfg;
  try {
    cfg = config::parse_config(text.str());
  } catch (const Error& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 1;
  }
  if (!out_dir.empty()) cfg.out = out_dir;

  cli::RunResult r;
  try {
    r = cli::run(cfg, command, cfg.out);
  } catch (const std::exception& e) {
    std::cerr << "shadowflow: " << e.what() << "\n";
    return 2;
  }
  for (const auto& f : r.files) std::cout << (std::filesystem::path(cfg.out) / f).string() << "\n";
  if (r.exit_code != 0) std::cerr << "shadowflow " << command << ": " << r.error << "\n";
  return r.exit_code;
}
