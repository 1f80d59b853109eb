#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nadim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exact SVD, singular value function and box counting over non-Archimedean fields"};
  std::string command;
  std::string config_path;
  nadim::cli::Flags flags;
  app.add_option("command", command, "svd | phi | dim | boxdim | experiment | mcintegral | verify")
      ->required()
      ->check(CLI::IsMember(nadim::cli::commands()));
  app.add_option("--config", config_path, "system config (JSON)")->required();
  app.add_option("--s", flags.s, "exponent of the singular value function");
  app.add_option("--kmax", flags.k_max, "word length for the pressure bracket")->check(CLI::PositiveNumber);
  app.add_option("--tmin", flags.t_min, "smallest box-count scale");
  app.add_option("--tmax", flags.t_max, "largest box-count scale");
  app.add_option("--trials", flags.trials, "experiment trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", flags.seed, "random seed (default: config seed, else 0)");
  app.add_option("--samples", flags.samples, "Monte-Carlo samples");
  app.add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", flags.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nadim::cli::kInvalid;
  }

  try {
    const auto config = nadim::cli::parse_config(config_path, nadim::cli::config_check_for(command));
    const auto report = nadim::cli::run_command(command, config, flags);
    std::cout << report.body;
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nadim::cli::exit_code_for(e);
  }
}
