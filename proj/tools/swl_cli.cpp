#include "swl/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Singular wave laboratory"};
  std::string command, config_path, out;
  std::optional<int> n, nr, nt;
  std::optional<double> kappa, T, grading;
  std::optional<std::string> lambda_grid, eps_seq;
  std::optional<long long> seed;
  std::vector<std::string> sets;

  std::string help = "one of:";
  for (const auto& c : swl::known_commands()) help += " " + c;
  app.add_option("command", command, help)->required();
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--n", n, "spatial dimension (n != 2)");
  app.add_option("--kappa", kappa, "potential parameter in (-1/2, 0)");
  app.add_option("--T", T, "half time span");
  app.add_option("--nr", nr, "radial nodes");
  app.add_option("--nt", nt, "time intervals (default: nr)");
  app.add_option("--grading", grading, "radial grading exponent");
  app.add_option("--lambda-grid", lambda_grid, "comma-separated lambda values");
  app.add_option("--seed", seed, "data seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--eps-seq", eps_seq, "comma-separated epsilon sequence");
  app.add_option("--set", sets, "extra key=value assignments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  swl::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = swl::parse_config_file(config_path);
    cfg.command = command;
    auto set = [&cfg](const char* key, const std::string& v) { swl::set_config_value(cfg, key, v); };
    if (n) set("n", std::to_string(*n));
    if (kappa) set("kappa", swl::format_cell(*kappa));
    if (T) cfg.T = *T;
    if (nr) cfg.n_r = *nr;
    if (nt) cfg.n_t = *nt;
    if (grading) cfg.grading = *grading;
    if (lambda_grid) set("lambda_grid", *lambda_grid);
    if (eps_seq) set("eps_seq", *eps_seq);
    if (seed) set("seed", std::to_string(*seed));
    if (!out.empty()) cfg.out = out;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw swl::ConfigError("--set expects key=value, got '" + s + "'");
      swl::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
  } catch (const swl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return swl::dispatch(cfg, std::cerr);
}
