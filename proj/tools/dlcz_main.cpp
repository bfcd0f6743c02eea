// dlcz: command-line front end.
//
//   dlcz sweep    [--config c.json] [--out dir] [--format csv|json]
//   dlcz fit      --data points.csv [--config c.json] [--out dir]
//   dlcz simulate [--config c.json] [--seed s] [--trials n] [--out dir]
//   dlcz aux {decay|spectrum|filter|timing|hbt|wavepacket} [--config c.json] [--out dir]
//   dlcz replay   manifest.json [--out dir]
//
// Exit status: 0 success, 2 invalid input, 3 numerical failure.

#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "dlcz/commands.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void add_common(CLI::App* app, std::string& config, std::string& out) {
  app->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--out", out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using dlcz::cmd::Format;
  CLI::App app{"DLCZ quantum-memory model, simulator and fitter", "dlcz"};
  app.set_version_flag("--version", dlcz::cmd::tool_version());
  app.require_subcommand(1);

  dlcz::cmd::CommandOptions o;
  std::string config;
  std::string out = ".";
  std::string data;
  std::string manifest;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  Format format = Format::csv;
  const std::map<std::string, Format> formats{{"csv", Format::csv}, {"json", Format::json}};

  auto* sweep = app.add_subcommand("sweep", "figures of merit along the configured p grid");
  add_common(sweep, config, out);
  sweep->add_option("--format", format, "csv or json")->transform(CLI::CheckedTransformer(formats));

  auto* fit = app.add_subcommand("fit", "fit kappa1, kappa2, alpha2 to measured curves");
  add_common(fit, config, out);
  fit->add_option("--data", data, "CSV with columns p1,g12,g12_err,qc,qc_err")->required()->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo click counts and estimates");
  add_common(simulate, config, out);
  auto* seed_opt = simulate->add_option("--seed", seed, "64-bit seed");
  auto* trials_opt = simulate->add_option("--trials", trials, "number of trials");

  auto* aux = app.add_subcommand("aux", "auxiliary plot data");
  add_common(aux, config, out);
  aux->add_option("subcommand", o.aux, "decay, spectrum, filter, timing, hbt or wavepacket")
      ->required()
      ->check(CLI::IsMember(dlcz::cmd::kAuxSubcommands));
  aux->add_option("--format", format, "csv or json")->transform(CLI::CheckedTransformer(formats));

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (!config.empty()) o.config = config;
  if (!data.empty()) o.data = data;
  if (*seed_opt) o.seed = seed;
  if (*trials_opt) o.trials = trials;
  o.out_dir = out;
  o.format = format;

  try {
    dlcz::cmd::Outcome result;
    if (*sweep) {
      result = dlcz::cmd::run_sweep(o);
    } else if (*fit) {
      result = dlcz::cmd::run_fit(o);
    } else if (*simulate) {
      result = dlcz::cmd::run_simulate(o);
    } else if (*aux) {
      result = dlcz::cmd::run_aux(o);
    } else {
      result = dlcz::cmd::replay(manifest, out);
    }
    for (const auto& path : result.outputs) std::cout << path.string() << '\n';
    return 0;
  } catch (const dlcz::fit::FitError& e) {
    std::cerr << "dlcz: fit failed: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const dlcz::InvalidArgument& e) {
    std::cerr << "dlcz: error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const dlcz::NumericalError& e) {
    std::cerr << "dlcz: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "dlcz: error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "dlcz: error: " << e.what() << '\n';
    return 1;
  }
}
