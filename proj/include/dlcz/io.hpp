#pragma once

// Configuration, CSV and run-manifest handling shared by the command-line
// tool and the Python module.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dlcz/diagnostics.hpp"
#include "dlcz/fitting.hpp"
#include "dlcz/model.hpp"
#include "dlcz/montecarlo.hpp"
#include "dlcz/physics.hpp"
#include "json.hpp"

namespace dlcz::io {

using nlohmann::json;

/// Malformed configuration or data. The message names the source, and the
/// line/column or the dotted field path of the problem.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct GridConfig {
  /// Exactly one of the two is non-empty after parsing. A p1 grid is mapped
  /// to p through the model's p1(p) inversion.
  std::vector<double> p;
  std::vector<double> p1;
};

struct FitConfig {
  fit::FreeParams initial{0.05, 1.0, 0.05};
  fit::FitOptions options{};
};

struct DecayAux {
  physics::DecayModel model{};
  double t_max = 10e-6;
  int points = 101;
};

struct SpectrumAux {
  physics::SpectroscopyParams spec{};
  double delta_max_hz = 30e6;
  int points = 201;
};

struct WavepacketAux {
  double width = 26e-9;
  double t_max = 80e-9;
  int points = 161;
};

struct HbtAux {
  fock::DetectorKind detector = fock::DetectorKind::linearized;
  /// Drop all four backgrounds (ideal two-mode squeezed state).
  bool without_backgrounds = false;
};

struct TimingAux {
  double p1 = 5e-3;
  double pc = 0.0;
};

struct FilterAux {
  double input_power_w = 10e-3;
  double wavelength_m = 852e-9;
};

struct AuxConfig {
  DecayAux decay{};
  SpectrumAux spectrum{};
  WavepacketAux wavepacket{};
  HbtAux hbt{};
  TimingAux timing{};
  FilterAux filter{};
};

/// The full configuration document. Every section is optional and defaults
/// to the published experiment.
struct Config {
  model::ModelParams model = model::paper_params();
  GridConfig grid{model::log_grid(1e-4, 0.2, 40), {}};
  mc::TrialBatchConfig montecarlo{};
  physics::SequenceConfig sequence{};
  physics::FilterChain filter = physics::FilterChain::paper();
  FitConfig fit{};
  AuxConfig aux{};
};

/// Parses and validates a configuration document. Unknown keys are errors.
Config parse_config(std::string_view text, std::string_view source = "<config>");
Config config_from_json(const json& doc, std::string_view source = "<config>");
Config load_config(const std::filesystem::path& path);

/// The effective configuration as a document that parses back to an
/// identical Config.
json config_to_json(const Config& config);

/// p values of the configured grid (p1 grids inverted with the model).
std::vector<double> resolve_p_grid(const Config& config);

// --- CSV -------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  ///< source line of each row
};

CsvTable read_csv(std::istream& in);

/// Shortest text that reads back to the same double (at most 17 significant
/// digits).
std::string format_double(double x);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

inline const std::vector<std::string> kMeasuredHeader{"p1", "g12", "g12_err", "qc", "qc_err"};

/// Reads measured curve data with the exact header p1,g12,g12_err,qc,qc_err.
/// Empty cells mark an absent observable.
std::vector<fit::MeasuredPoint> read_measured_points(std::istream& in, std::string_view source = "<data>");

// --- manifests -------------------------------------------------------------

struct RunManifest {
  std::string command;
  json parameters;  ///< effective configuration plus command arguments
  std::vector<std::uint64_t> seeds;
  std::string tool_version;
  std::map<std::string, std::string> input_digests;  ///< path -> sha256 hex
  std::string timestamp;                             ///< UTC, ISO 8601
};

json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& doc);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
std::string utc_timestamp();

}  // namespace dlcz::io
