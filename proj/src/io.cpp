#include "dlcz/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace dlcz::io {

namespace {

// Reads one JSON object, recording which keys were consumed so leftovers can
// be rejected as typos.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::string_view source)
      : obj_(obj), path_(std::move(path)), source_(source) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(std::string_view key, std::string_view what) const {
    std::string where = path_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + std::string(key);
    throw ConfigError(std::string(source_) + ": " + (where.empty() ? "<root>" : where) + ": " + std::string(what));
  }

  [[nodiscard]] bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  [[nodiscard]] std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::string_view source_;
  std::set<std::string> seen_;
};

// Re-raises a validation failure from a domain type as a ConfigError
// carrying the source name.
template <class Fn>
void validated(std::string_view source, std::string_view section, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string(source) + ": " + std::string(section) + ": " + e.what());
  }
}

model::ModelParams read_model(ObjectReader& r, model::ModelParams m) {
  m.p = r.number("p", m.p);
  m.kappa1 = r.number("kappa1", m.kappa1);
  m.kappa2 = r.number("kappa2", m.kappa2);
  m.alpha1 = r.number("alpha1", m.alpha1);
  m.alpha2 = r.number("alpha2", m.alpha2);
  m.eta2 = r.number("eta2", m.eta2);
  m.b1 = r.number("b1", m.b1);
  m.b2 = r.number("b2", m.b2);
  r.finish();
  return m;
}

GridConfig read_grid(ObjectReader& r, std::string_view source) {
  GridConfig g;
  int forms = 0;
  if (r.has("p")) {
    g.p = r.numbers("p");
    ++forms;
  }
  if (r.has("p1")) {
    g.p1 = r.numbers("p1");
    ++forms;
  }
  if (r.has("p_log")) {
    ObjectReader lr(r.at("p_log"), r.child_path("p_log"), source);
    const double lo = lr.number("min", 1e-4);
    const double hi = lr.number("max", 0.2);
    const long n = lr.integer("count", 40);
    lr.finish();
    if (!(lo > 0.0 && hi >= lo && hi < 1.0) || n < 1) {
      lr.fail("", "need 0 < min <= max < 1 and count >= 1");
    }
    g.p = model::log_grid(lo, hi, static_cast<int>(n));
    ++forms;
  }
  r.finish();
  if (forms != 1) r.fail("", "give exactly one of 'p', 'p1', 'p_log'");
  const auto& values = g.p.empty() ? g.p1 : g.p;
  const char* name = g.p.empty() ? "p1" : "p";
  if (values.empty()) r.fail(name, "grid must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const bool ok = g.p.empty() ? v > 0.0 : (v >= 0.0 && v < 1.0);
    if (!ok) {
      r.fail(std::string(name) + "[" + std::to_string(i) + "]",
             "grid value " + format_double(v) + (g.p.empty() ? " must be > 0" : " outside [0,1)"));
    }
  }
  return g;
}

mc::DetectorMode detector_mode(const std::string& s, ObjectReader& r) {
  if (s == "threshold") return mc::DetectorMode::threshold;
  if (s == "linearized-rejection") return mc::DetectorMode::linearized_rejection;
  r.fail("detector", "expected 'threshold' or 'linearized-rejection'");
}

std::string to_string(mc::DetectorMode m) {
  return m == mc::DetectorMode::threshold ? "threshold" : "linearized-rejection";
}

fock::DetectorKind detector_kind(const std::string& s, ObjectReader& r) {
  if (s == "linearized") return fock::DetectorKind::linearized;
  if (s == "threshold") return fock::DetectorKind::threshold;
  r.fail("detector", "expected 'linearized' or 'threshold'");
}

std::string to_string(fock::DetectorKind k) {
  return k == fock::DetectorKind::linearized ? "linearized" : "threshold";
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config config_from_json(const json& doc, std::string_view source) {
  Config c;
  ObjectReader root(doc, "", source);

  if (root.has("model")) {
    ObjectReader r(root.at("model"), "model", source);
    c.model = read_model(r, c.model);
  }
  validated(source, "model", [&] { c.model.validate(); });

  if (root.has("grid")) {
    ObjectReader r(root.at("grid"), "grid", source);
    c.grid = read_grid(r, source);
  }

  if (root.has("montecarlo")) {
    ObjectReader r(root.at("montecarlo"), "montecarlo", source);
    auto& m = c.montecarlo;
    m.n_trials = r.unsigned_integer("n_trials", m.n_trials);
    m.seed = r.unsigned_integer("seed", m.seed);
    m.detector = detector_mode(r.string("detector", to_string(m.detector)), r);
    m.batch_size = r.unsigned_integer("batch_size", m.batch_size);
    m.threads = static_cast<unsigned>(r.unsigned_integer("threads", m.threads));
    m.dark1 = r.number("dark1", m.dark1);
    m.dark2 = r.number("dark2", m.dark2);
    r.finish();
  }
  validated(source, "montecarlo", [&] { c.montecarlo.validate(); });

  if (root.has("sequence")) {
    ObjectReader r(root.at("sequence"), "sequence", source);
    auto& s = c.sequence;
    if (r.has("phases")) {
      const json& arr = r.at("phases");
      if (!arr.is_array()) r.fail("phases", "expected an array");
      s.phases.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader pr(arr[i], "sequence.phases[" + std::to_string(i) + "]", source);
        physics::SequencePhase ph;
        ph.name = pr.string("name", "");
        ph.duration = pr.number("duration_s", 0.0);
        pr.finish();
        if (ph.name.empty()) pr.fail("name", "phase needs a name");
        s.phases.push_back(ph);
      }
    }
    s.trial_period = r.number("trial_period_s", s.trial_period);
    s.trials_per_cycle = r.integer("trials_per_cycle", s.trials_per_cycle);
    s.cycle_rate = r.number("cycle_rate_hz", s.cycle_rate);
    s.protocol_phase = r.string("protocol_phase", s.protocol_phase);
    if (r.has("metadata")) {
      ObjectReader mr(r.at("metadata"), "sequence.metadata", source);
      auto& md = s.metadata;
      md.write_detuning_hz = mr.number("write_detuning_hz", md.write_detuning_hz);
      md.write_angle_deg = mr.number("write_angle_deg", md.write_angle_deg);
      md.write_waist_m = mr.number("write_waist_m", md.write_waist_m);
      if (mr.has("dipole_powers_w")) md.dipole_powers_w = mr.numbers("dipole_powers_w");
      md.temperature_k = mr.number("temperature_k", md.temperature_k);
      mr.finish();
    }
    r.finish();
  }
  validated(source, "sequence", [&] { c.sequence.validate(); });

  if (root.has("filter")) {
    ObjectReader r(root.at("filter"), "filter", source);
    if (r.has("stages")) {
      const json& arr = r.at("stages");
      if (!arr.is_array()) r.fail("stages", "expected an array");
      c.filter.stages.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader sr(arr[i], "filter.stages[" + std::to_string(i) + "]", source);
        physics::FilterStage st;
        st.name = sr.string("name", "stage" + std::to_string(i));
        st.isolation_db = sr.number("isolation_db", 0.0);
        st.transmission = sr.number("transmission", 1.0);
        sr.finish();
        c.filter.stages.push_back(st);
      }
    }
    c.aux.filter.input_power_w = r.number("input_power_w", c.aux.filter.input_power_w);
    c.aux.filter.wavelength_m = r.number("wavelength_m", c.aux.filter.wavelength_m);
    r.finish();
  }
  validated(source, "filter", [&] {
    c.filter.validate();
    if (!(c.aux.filter.input_power_w >= 0.0)) throw InvalidArgument("input_power_w must be >= 0");
    if (!(c.aux.filter.wavelength_m > 0.0)) throw InvalidArgument("wavelength_m must be > 0");
  });

  if (root.has("fit")) {
    ObjectReader r(root.at("fit"), "fit", source);
    auto& f = c.fit;
    if (r.has("initial")) {
      ObjectReader ir(r.at("initial"), "fit.initial", source);
      f.initial.kappa1 = ir.number("kappa1", f.initial.kappa1);
      f.initial.kappa2 = ir.number("kappa2", f.initial.kappa2);
      f.initial.alpha2 = ir.number("alpha2", f.initial.alpha2);
      ir.finish();
      if (!(f.initial.kappa1 >= 0.0 && f.initial.kappa2 >= 0.0 && f.initial.alpha2 > 0.0 && f.initial.alpha2 <= 1.0)) {
        ir.fail("", "need kappa1, kappa2 >= 0 and alpha2 in (0,1]");
      }
    }
    f.options.use_g12 = r.boolean("use_g12", f.options.use_g12);
    f.options.use_qc = r.boolean("use_qc", f.options.use_qc);
    f.options.weighted = r.boolean("weighted", f.options.weighted);
    f.options.starts = static_cast<int>(r.integer("starts", f.options.starts));
    f.options.start_span_decades = r.number("start_span_decades", f.options.start_span_decades);
    f.options.max_iterations = static_cast<int>(r.integer("max_iterations", f.options.max_iterations));
    r.finish();
    if (f.options.starts < 1) r.fail("starts", "must be >= 1");
    if (f.options.max_iterations < 1) r.fail("max_iterations", "must be >= 1");
    if (!f.options.use_g12 && !f.options.use_qc) r.fail("", "at least one of use_g12, use_qc must be true");
  }

  if (root.has("aux")) {
    ObjectReader r(root.at("aux"), "aux", source);
    auto& a = c.aux;
    auto points = [](ObjectReader& rr, int fallback) {
      const long n = rr.integer("points", fallback);
      if (n < 2) rr.fail("points", "must be >= 2");
      return static_cast<int>(n);
    };
    if (r.has("decay")) {
      ObjectReader dr(r.at("decay"), "aux.decay", source);
      a.decay.model.q0 = dr.number("q0", a.decay.model.q0);
      a.decay.model.tau = dr.number("tau_s", a.decay.model.tau);
      a.decay.t_max = dr.number("t_max_s", a.decay.t_max);
      a.decay.points = points(dr, a.decay.points);
      dr.finish();
      if (!(a.decay.t_max > 0.0)) dr.fail("t_max_s", "must be > 0");
    }
    if (r.has("spectrum")) {
      ObjectReader sr(r.at("spectrum"), "aux.spectrum", source);
      a.spectrum.spec.od = sr.number("od", a.spectrum.spec.od);
      a.spectrum.spec.gamma_hz = sr.number("gamma_hz", a.spectrum.spec.gamma_hz);
      a.spectrum.delta_max_hz = sr.number("delta_max_hz", a.spectrum.delta_max_hz);
      a.spectrum.points = points(sr, a.spectrum.points);
      sr.finish();
      if (!(a.spectrum.delta_max_hz > 0.0)) sr.fail("delta_max_hz", "must be > 0");
    }
    if (r.has("wavepacket")) {
      ObjectReader wr(r.at("wavepacket"), "aux.wavepacket", source);
      a.wavepacket.width = wr.number("width_s", a.wavepacket.width);
      a.wavepacket.t_max = wr.number("t_max_s", a.wavepacket.t_max);
      a.wavepacket.points = points(wr, a.wavepacket.points);
      wr.finish();
      if (!(a.wavepacket.t_max > 0.0)) wr.fail("t_max_s", "must be > 0");
    }
    if (r.has("hbt")) {
      ObjectReader hr(r.at("hbt"), "aux.hbt", source);
      a.hbt.detector = detector_kind(hr.string("detector", to_string(a.hbt.detector)), hr);
      a.hbt.without_backgrounds = hr.boolean("without_backgrounds", a.hbt.without_backgrounds);
      hr.finish();
    }
    if (r.has("timing")) {
      ObjectReader tr(r.at("timing"), "aux.timing", source);
      a.timing.p1 = tr.number("p1", a.timing.p1);
      a.timing.pc = tr.number("pc", a.timing.pc);
      tr.finish();
    }
    r.finish();
    validated(source, "aux", [&] {
      a.decay.model.validate();
      a.spectrum.spec.validate();
      if (!(a.wavepacket.width > 0.0)) throw InvalidArgument("wavepacket.width_s must be > 0");
    });
  }

  root.finish();
  return c;
}

Config parse_config(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": invalid JSON (" + e.what() + ")");
  }
  return config_from_json(doc, source);
}

Config load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

json config_to_json(const Config& c) {
  json doc;
  const auto& m = c.model;
  doc["model"] = {{"p", m.p},           {"kappa1", m.kappa1}, {"kappa2", m.kappa2}, {"alpha1", m.alpha1},
                  {"alpha2", m.alpha2}, {"eta2", m.eta2},     {"b1", m.b1},         {"b2", m.b2}};
  if (!c.grid.p.empty()) {
    doc["grid"] = {{"p", c.grid.p}};
  } else {
    doc["grid"] = {{"p1", c.grid.p1}};
  }
  const auto& mc = c.montecarlo;
  doc["montecarlo"] = {{"n_trials", mc.n_trials},     {"seed", mc.seed},         {"detector", to_string(mc.detector)},
                       {"batch_size", mc.batch_size}, {"threads", mc.threads},   {"dark1", mc.dark1},
                       {"dark2", mc.dark2}};
  json phases = json::array();
  for (const auto& ph : c.sequence.phases) phases.push_back({{"name", ph.name}, {"duration_s", ph.duration}});
  const auto& md = c.sequence.metadata;
  doc["sequence"] = {{"phases", phases},
                     {"trial_period_s", c.sequence.trial_period},
                     {"trials_per_cycle", c.sequence.trials_per_cycle},
                     {"cycle_rate_hz", c.sequence.cycle_rate},
                     {"protocol_phase", c.sequence.protocol_phase},
                     {"metadata",
                      {{"write_detuning_hz", md.write_detuning_hz},
                       {"write_angle_deg", md.write_angle_deg},
                       {"write_waist_m", md.write_waist_m},
                       {"dipole_powers_w", md.dipole_powers_w},
                       {"temperature_k", md.temperature_k}}}};
  json stages = json::array();
  for (const auto& s : c.filter.stages) {
    stages.push_back({{"name", s.name}, {"isolation_db", s.isolation_db}, {"transmission", s.transmission}});
  }
  doc["filter"] = {{"stages", stages},
                   {"input_power_w", c.aux.filter.input_power_w},
                   {"wavelength_m", c.aux.filter.wavelength_m}};
  const auto& f = c.fit;
  doc["fit"] = {{"initial", {{"kappa1", f.initial.kappa1}, {"kappa2", f.initial.kappa2}, {"alpha2", f.initial.alpha2}}},
                {"use_g12", f.options.use_g12},
                {"use_qc", f.options.use_qc},
                {"weighted", f.options.weighted},
                {"starts", f.options.starts},
                {"start_span_decades", f.options.start_span_decades},
                {"max_iterations", f.options.max_iterations}};
  const auto& a = c.aux;
  doc["aux"] = {
      {"decay", {{"q0", a.decay.model.q0}, {"tau_s", a.decay.model.tau}, {"t_max_s", a.decay.t_max}, {"points", a.decay.points}}},
      {"spectrum",
       {{"od", a.spectrum.spec.od},
        {"gamma_hz", a.spectrum.spec.gamma_hz},
        {"delta_max_hz", a.spectrum.delta_max_hz},
        {"points", a.spectrum.points}}},
      {"wavepacket", {{"width_s", a.wavepacket.width}, {"t_max_s", a.wavepacket.t_max}, {"points", a.wavepacket.points}}},
      {"hbt", {{"detector", to_string(a.hbt.detector)}, {"without_backgrounds", a.hbt.without_backgrounds}}},
      {"timing", {{"p1", a.timing.p1}, {"pc", a.timing.pc}}}};
  return doc;
}

std::vector<double> resolve_p_grid(const Config& config) {
  if (!config.grid.p.empty()) return config.grid.p;
  std::vector<double> p;
  p.reserve(config.grid.p1.size());
  for (double p1 : config.grid.p1) p.push_back(fit::invert_p1(config.model, p1));
  return p;
}

// --- CSV -------------------------------------------------------------------

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = stripped.find(',', start);
      cells.push_back(trim(std::string_view(stripped).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.rows.push_back(std::move(cells));
      t.line_numbers.push_back(line_no);
    }
  }
  return t;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

std::vector<fit::MeasuredPoint> read_measured_points(std::istream& in, std::string_view source) {
  const CsvTable t = read_csv(in);
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  if (t.header != kMeasuredHeader) {
    throw ConfigError(std::string(source) + ":1: header '" + join(t.header) + "' does not match the expected '" +
                      join(kMeasuredHeader) + "'");
  }
  std::vector<fit::MeasuredPoint> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = std::string(source) + ":" + std::to_string(t.line_numbers[r]);
    if (row.size() != kMeasuredHeader.size()) {
      throw ConfigError(where + ": expected " + std::to_string(kMeasuredHeader.size()) + " cells, found " +
                        std::to_string(row.size()));
    }
    auto cell = [&](std::size_t i) -> std::optional<double> {
      const std::string& s = row[i];
      if (s.empty()) return std::nullopt;
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError(where + ": column '" + kMeasuredHeader[i] + "': '" + s + "' is not a number");
      }
      return v;
    };
    fit::MeasuredPoint pt{};
    const auto p1 = cell(0);
    if (!p1) throw ConfigError(where + ": column 'p1' must not be empty");
    pt.p1 = *p1;
    for (std::size_t obs = 0; obs < 2; ++obs) {
      const auto v = cell(1 + 2 * obs);
      const auto e = cell(2 + 2 * obs);
      if (v.has_value() != e.has_value()) {
        throw ConfigError(where + ": '" + kMeasuredHeader[1 + 2 * obs] + "' and its error must both be given or both be empty");
      }
      if (v) (obs == 0 ? pt.g12 : pt.qc) = fit::Observation{*v, *e};
    }
    try {
      pt.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    out.push_back(pt);
  }
  return out;
}

// --- manifests -------------------------------------------------------------

json to_json(const RunManifest& m) {
  return {{"command", m.command},           {"parameters", m.parameters},       {"seeds", m.seeds},
          {"tool_version", m.tool_version}, {"input_digests", m.input_digests}, {"timestamp", m.timestamp}};
}

RunManifest manifest_from_json(const json& doc) {
  try {
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.parameters = doc.at("parameters");
    m.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.input_digests = doc.at("input_digests").get<std::map<std::string, std::string>>();
    m.timestamp = doc.at("timestamp").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dlcz::io
