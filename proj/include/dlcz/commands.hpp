#pragma once

// The sweep, fit, simulate, aux and replay commands. Each writes its result
// files and a manifest.json into the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dlcz/io.hpp"

namespace dlcz::cmd {

enum class Format { csv, json };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  Format format = Format::csv;
  std::optional<std::filesystem::path> data;  ///< fit only
  std::string aux;                            ///< aux subcommand
};

inline const std::vector<std::string> kAuxSubcommands{"decay", "spectrum", "filter", "timing", "hbt", "wavepacket"};

/// Row-oriented result with string or numeric cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<io::json>> rows;
};

void write_table(const std::filesystem::path& path, const Table& table, Format format);

Table sweep_table(const io::Config& config);
Table aux_table(const io::Config& config, const std::string& subcommand);
io::json simulate_json(const io::Config& config);
io::json fit_json(const fit::FitResult& result, bool failed);
Table residual_table(const fit::ResidualReport& report);

struct Outcome {
  io::RunManifest manifest;
  std::vector<std::filesystem::path> outputs;
};

Outcome run_sweep(const CommandOptions& options);
Outcome run_fit(const CommandOptions& options);
Outcome run_simulate(const CommandOptions& options);
Outcome run_aux(const CommandOptions& options);

/// Re-runs the command recorded in a manifest into out_dir. Inputs whose
/// digest no longer matches produce a warning.
Outcome replay(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir);

std::string tool_version();

}  // namespace dlcz::cmd
