#include "dlcz/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dlcz::cmd {

namespace fs = std::filesystem;
using io::json;

namespace {

json number_or_null(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json estimate_json(const mc::EstimateWithError& e) {
  return {{"value", e.value}, {"sigma", number_or_null(e.sigma)}};
}

json optional_estimate_json(const std::optional<mc::EstimateWithError>& e) {
  if (!e) return {{"value", nullptr}, {"sigma", nullptr}, {"undefined", true}};
  return estimate_json(*e);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

io::Config load(const CommandOptions& options) {
  io::Config c = options.config ? io::load_config(*options.config) : io::Config{};
  if (options.seed) c.montecarlo.seed = *options.seed;
  if (options.trials) {
    c.montecarlo.n_trials = *options.trials;
    c.montecarlo.validate();
  }
  return c;
}

std::string format_name(Format f) { return f == Format::csv ? "csv" : "json"; }

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw io::ConfigError("manifest: unknown format '" + s + "'");
}

io::RunManifest start_manifest(const std::string& command, const io::Config& config, const CommandOptions& options) {
  io::RunManifest m;
  m.command = command;
  m.tool_version = tool_version();
  m.timestamp = io::utc_timestamp();
  m.parameters = {{"config", io::config_to_json(config)}, {"format", format_name(options.format)}};
  if (options.config) {
    m.parameters["config_path"] = options.config->string();
    m.input_digests[options.config->string()] = io::sha256_hex(io::read_file(*options.config));
  }
  return m;
}

Outcome finish(io::RunManifest manifest, std::vector<fs::path> outputs, const fs::path& out_dir) {
  const fs::path path = out_dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw io::ConfigError(path.string() + ": cannot write");
  out << io::to_json(manifest).dump(2) << '\n';
  outputs.push_back(path);
  return {std::move(manifest), std::move(outputs)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::ConfigError(path.string() + ": cannot write");
  out << text;
}

void prepare(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::ConfigError(dir.string() + ": cannot create output directory: " + ec.message());
}

std::string extension(Format f) { return f == Format::csv ? ".csv" : ".json"; }

model::ModelParams hbt_params(const io::Config& config, double p) {
  model::ModelParams m = config.model.with_p(p);
  if (config.aux.hbt.without_backgrounds) {
    m.kappa1 = m.kappa2 = m.b1 = m.b2 = 0.0;
  }
  return m;
}

}  // namespace

std::string tool_version() { return DLCZ_VERSION; }

void write_table(const fs::path& path, const Table& table, Format format) {
  std::ostringstream out;
  if (format == Format::csv) {
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << (i ? "," : "");
        if (row[i].is_number()) {
          out << io::format_double(row[i].get<double>());
        } else if (row[i].is_string()) {
          out << row[i].get<std::string>();
        }
      }
      out << '\n';
    }
  } else {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[table.header[i]] = row[i];
      rows.push_back(std::move(obj));
    }
    out << json{{"columns", table.header}, {"rows", rows}}.dump(2) << '\n';
  }
  write_text(path, out.str());
}

Table sweep_table(const io::Config& config) {
  const auto p = io::resolve_p_grid(config);
  Table t{{"p", "p1", "p2", "p12", "g12", "qc", "pc"}, {}};
  for (const auto& pt : model::sweep(config.model, p)) {
    t.rows.push_back({pt.p, pt.p1, pt.p2, pt.p12, pt.g12, pt.qc, pt.pc});
  }
  return t;
}

Table aux_table(const io::Config& config, const std::string& sub) {
  const auto& a = config.aux;
  Table t;
  if (sub == "decay") {
    t.header = {"t_s", "qc"};
    for (double time : linspace(0.0, a.decay.t_max, a.decay.points)) {
      t.rows.push_back({time, physics::retrieval_vs_time(a.decay.model, time)});
    }
  } else if (sub == "spectrum") {
    t.header = {"delta_hz", "transmission"};
    for (double d : linspace(-a.spectrum.delta_max_hz, a.spectrum.delta_max_hz, a.spectrum.points)) {
      t.rows.push_back({d, physics::transmission_profile(a.spectrum.spec, d)});
    }
  } else if (sub == "wavepacket") {
    t.header = {"t_s", "amplitude"};
    for (double time : linspace(-a.wavepacket.t_max, a.wavepacket.t_max, a.wavepacket.points)) {
      t.rows.push_back({time, physics::wavepacket(time, a.wavepacket.width)});
    }
  } else if (sub == "filter") {
    t.header = {"stage", "isolation_db", "transmission", "leakage_photons_per_s"};
    physics::FilterChain partial;
    for (const auto& s : config.filter.stages) {
      partial.stages.push_back(s);
      const auto b = physics::chain_budget(partial, a.filter.input_power_w, a.filter.wavelength_m);
      t.rows.push_back({s.name, s.isolation_db, s.transmission, b.leakage_photons_per_s});
    }
    const auto total = physics::chain_budget(config.filter, a.filter.input_power_w, a.filter.wavelength_m);
    t.rows.push_back({"total", total.total_isolation_db, total.total_transmission, total.leakage_photons_per_s});
  } else if (sub == "timing") {
    t.header = {"quantity", "value"};
    const auto r = physics::rates(config.sequence, a.timing.p1, a.timing.pc);
    t.rows = {{"p1", a.timing.p1},
              {"pc", a.timing.pc},
              {"trial_period_s", config.sequence.trial_period},
              {"cycle_period_s", 1.0 / config.sequence.cycle_rate},
              {"protocol_duration_s", config.sequence.protocol_duration()},
              {"duty_fraction", config.sequence.duty_fraction()},
              {"herald_rate_in_protocol_hz", r.herald_rate_in_protocol},
              {"herald_rate_averaged_hz", r.herald_rate_averaged},
              {"pair_rate_averaged_hz", r.pair_rate_averaged}};
  } else if (sub == "hbt") {
    t.header = {"p", "g12", "w_ideal", "w_model"};
    auto grid = io::resolve_p_grid(config);
    std::sort(grid.begin(), grid.end());
    for (double p : grid) {
      const auto m = hbt_params(config, p);
      const double g12 = model::cross_correlation(m);
      t.rows.push_back({p, g12, model::antibunching_ideal(g12), model::antibunching_model(m, a.hbt.detector)});
    }
  } else {
    std::string known;
    for (const auto& s : kAuxSubcommands) known += (known.empty() ? "" : ", ") + s;
    throw InvalidArgument("aux: unknown subcommand '" + sub + "' (expected one of " + known + ")");
  }
  return t;
}

json simulate_json(const io::Config& config) {
  const auto counts = mc::sample_trials(config.model, config.montecarlo);
  const auto est = mc::estimate(counts, config.model.eta2);
  return {{"counts",
           {{"n_trials", counts.n_trials},
            {"k1", counts.k1},
            {"k2a", counts.k2a},
            {"k2b", counts.k2b},
            {"k2", counts.k2},
            {"k12", counts.k12},
            {"k1_2a", counts.k1_2a},
            {"k1_2b", counts.k1_2b},
            {"k2a_2b", counts.k2a_2b},
            {"k_triple", counts.k_triple}}},
          {"estimates",
           {{"p1", estimate_json(est.p1)},
            {"p2", estimate_json(est.p2)},
            {"p12", estimate_json(est.p12)},
            {"g12", optional_estimate_json(est.g12)},
            {"pc", optional_estimate_json(est.pc)},
            {"qc", optional_estimate_json(est.qc)},
            {"w", optional_estimate_json(est.w)}}}};
}

json fit_json(const fit::FitResult& r, bool failed) {
  json cov = json::array();
  for (const auto& row : r.covariance) cov.push_back(row);
  return {{"status", failed ? "failed" : "converged"},
          {"kappa1", r.params.kappa1},
          {"kappa2", r.params.kappa2},
          {"alpha2", r.params.alpha2},
          {"sigma", {{"kappa1", r.sigma(0)}, {"kappa2", r.sigma(1)}, {"alpha2", r.sigma(2)}}},
          {"covariance", cov},
          {"parameter_order", {"kappa1", "kappa2", "alpha2"}},
          {"residual_norm", r.residual_norm},
          {"dof", r.dof},
          {"chi2_per_dof", r.chi2_per_dof},
          {"fixed", {{"alpha1", r.fixed.alpha1}, {"b1", r.fixed.b1}, {"b2", r.fixed.b2}, {"eta2", r.fixed.eta2}}},
          {"used_g12", r.used_g12},
          {"used_qc", r.used_qc},
          {"weighted", r.weighted},
          {"iterations", r.iterations},
          {"start_index", r.start_index},
          {"warnings", r.warnings}};
}

Table residual_table(const fit::ResidualReport& report) {
  Table t{{"p1", "observable", "data", "model", "sigma", "standardized"}, {}};
  for (const auto& r : report.rows) t.rows.push_back({r.p1, r.observable, r.data, r.model, r.sigma, r.standardized});
  return t;
}

Outcome run_sweep(const CommandOptions& options) {
  const io::Config config = load(options);
  auto manifest = start_manifest("sweep", config, options);
  prepare(options.out_dir);
  const fs::path out = options.out_dir / ("sweep" + extension(options.format));
  write_table(out, sweep_table(config), options.format);
  return finish(std::move(manifest), {out}, options.out_dir);
}

Outcome run_aux(const CommandOptions& options) {
  const io::Config config = load(options);
  auto manifest = start_manifest("aux", config, options);
  manifest.parameters["subcommand"] = options.aux;
  const Table table = aux_table(config, options.aux);
  prepare(options.out_dir);
  const fs::path out = options.out_dir / ("aux_" + options.aux + extension(options.format));
  write_table(out, table, options.format);
  return finish(std::move(manifest), {out}, options.out_dir);
}

Outcome run_simulate(const CommandOptions& options) {
  const io::Config config = load(options);
  auto manifest = start_manifest("simulate", config, options);
  manifest.seeds = {config.montecarlo.seed};
  const json result = simulate_json(config);
  prepare(options.out_dir);
  const fs::path out = options.out_dir / "simulate.json";
  write_text(out, result.dump(2) + "\n");
  return finish(std::move(manifest), {out}, options.out_dir);
}

Outcome run_fit(const CommandOptions& options) {
  if (!options.data) throw InvalidArgument("fit: --data <csv> is required");
  const io::Config config = load(options);
  auto manifest = start_manifest("fit", config, options);
  manifest.parameters["data_path"] = options.data->string();
  const std::string text = io::read_file(*options.data);
  manifest.input_digests[options.data->string()] = io::sha256_hex(text);
  std::istringstream in(text);
  const auto data = io::read_measured_points(in, options.data->string());

  const fit::FixedParams fixed{config.model.alpha1, config.model.b1, config.model.b2, config.model.eta2};
  fit::FitOptions fo = config.fit.options;
  const bool has_g12 = std::any_of(data.begin(), data.end(), [](const auto& d) { return d.g12.has_value(); });
  const bool has_qc = std::any_of(data.begin(), data.end(), [](const auto& d) { return d.qc.has_value(); });
  fo.use_g12 = fo.use_g12 && has_g12;
  fo.use_qc = fo.use_qc && has_qc;
  if (!fo.use_g12 && !fo.use_qc) throw InvalidArgument("fit: the data contain no usable observable");

  prepare(options.out_dir);
  const fs::path fit_path = options.out_dir / "fit.json";
  const fs::path res_path = options.out_dir / "residuals.csv";
  try {
    const auto result = fit::fit(data, fixed, config.fit.initial, fo);
    write_text(fit_path, fit_json(result, false).dump(2) + "\n");
    write_table(res_path, residual_table(fit::residual_report(result, data)), Format::csv);
  } catch (const fit::FitError& e) {
    write_text(fit_path, fit_json(e.best_so_far(), true).dump(2) + "\n");
    finish(std::move(manifest), {fit_path}, options.out_dir);
    throw;
  }
  return finish(std::move(manifest), {fit_path, res_path}, options.out_dir);
}

Outcome replay(const fs::path& manifest_path, const fs::path& out_dir) {
  const auto m = io::manifest_from_json(json::parse(io::read_file(manifest_path)));
  for (const auto& [path, digest] : m.input_digests) {
    std::error_code ec;
    if (!fs::exists(path, ec)) {
      warn("replay: input '" + path + "' is missing");
    } else if (io::sha256_hex(io::read_file(path)) != digest) {
      warn("replay: input '" + path + "' has changed since the recorded run");
    }
  }

  // The embedded effective configuration is authoritative; it is written to
  // the output directory so the re-run has a concrete config file.
  prepare(out_dir);
  const json& params = m.parameters;
  const fs::path cfg_path = out_dir / "replay_config.json";
  write_text(cfg_path, params.at("config").dump(2) + "\n");

  CommandOptions o;
  o.config = cfg_path;
  o.out_dir = out_dir;
  o.format = parse_format(params.value("format", std::string("csv")));
  if (params.contains("data_path")) o.data = params.at("data_path").get<std::string>();
  if (params.contains("subcommand")) o.aux = params.at("subcommand").get<std::string>();

  if (m.command == "sweep") return run_sweep(o);
  if (m.command == "fit") return run_fit(o);
  if (m.command == "simulate") return run_simulate(o);
  if (m.command == "aux") return run_aux(o);
  throw io::ConfigError(manifest_path.string() + ": unknown command '" + m.command + "'");
}

}  // namespace dlcz::cmd
