#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fpa/errors.hpp"
#include "fpa/scenario.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::string eps;
  std::optional<std::uint64_t> seed;
  std::string snapshot;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0)) {
      throw fpa::ConfigError("--eps: '" + item + "' is not a positive number");
    }
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fokker-Planck-alignment scenarios"};
  app.require_subcommand(1);
  Args args;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "scenario JSON")->required();
    sub->add_option("--out", args.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", args.seed, "base seed override for particle runs");
    return sub;
  };
  add("kinetic", "kinetic solver run with entropy diagnostics");
  add("particles", "noisy averaged particle system");
  add("macro", "isothermal Euler-alignment solver");
  add("hydro-sweep", "penalized kinetic runs against the macro reference")
      ->add_option("--eps", args.eps, "comma-separated epsilon list");
  add("diagnose", "one entropy report row for a phase snapshot")
      ->add_option("snapshot", args.snapshot, "x,v,f snapshot CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fpa::kExitConfigError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  fpa::Command command = fpa::Command::kinetic;
  if (name == "particles") command = fpa::Command::particles;
  if (name == "macro") command = fpa::Command::macro;
  if (name == "hydro-sweep") command = fpa::Command::hydro_sweep;
  if (name == "diagnose") command = fpa::Command::diagnose;

  fpa::ScenarioConfig config;
  fpa::CommandOptions options;
  try {
    config = fpa::load_config(args.config);
    if (args.seed && config.particles) config.particles->seed = *args.seed;
    if (!args.eps.empty()) options.epsilons = parse_list(args.eps);
  } catch (const fpa::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return fpa::kExitConfigError;
  }
  if (!args.out.empty()) options.out_dir = args.out;
  if (!args.snapshot.empty()) options.snapshot = args.snapshot;

  const int code = fpa::run_command(command, config, options, std::cout);
  std::cout << fpa::to_string(command) << ": exit " << code << "\n";
  return code;
}
