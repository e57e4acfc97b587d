#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridalign/analysis.hpp"

namespace gridalign {

namespace fs = std::filesystem;

/// Process exit codes of every stage.
enum class ExitCode : int { Success = 0, ValidationFailures = 1, FatalIo = 2 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs and parameters of a batch run. Empty paths are skipped.
struct RunConfig {
    fs::path tariff_dir;
    fs::path metadata_file;
    fs::path aef_dir;
    fs::path dam_dir;
    fs::path genemis_dir;
    fs::path regions_file;
    fs::path gazetteer_file;
    fs::path programs_file;
    fs::path program_metadata_file;
    fs::path out_dir = "out";

    int year = 2023;
    SeasonSpec seasons;
    double reference_kw = 1000.0;
    double reference_price = 0.08;  // $/kWh
    unsigned jobs = 1;
};

/// Applies `key = value` lines ('#' starts a comment). Relative paths are
/// resolved against `base_dir`. Unknown keys throw ConfigError.
void apply_config_text(RunConfig& cfg, std::string_view text, fs::path const& base_dir = {});
void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value, fs::path const& base_dir = {});
RunConfig load_config(fs::path const& path);

/// Throws ConfigError when a referenced input does not exist or a numeric
/// parameter is out of range.
void validate_config(RunConfig const& cfg);

/// Parses "6-9" or "6,7,8,9".
std::set<int> parse_month_set(std::string_view text);

using Logger = std::function<void(std::string const&)>;

/// Parses and validates every input, assigns tariffs to regions, and writes
/// `manifest.csv` plus `ingest/tariff_regions.csv`.
ExitCode run_ingest(RunConfig const& cfg, Logger const& log);

/// Writes month-hour matrices for every tariff and signal under `flatten/`.
ExitCode run_flatten(RunConfig const& cfg, Logger const& log);

/// Writes the analysis CSVs and `analysis/summary.txt`.
ExitCode run_analyze(RunConfig const& cfg, Logger const& log);

/// Concatenates stage summaries into `report.txt` and returns its text.
ExitCode run_report(RunConfig const& cfg, Logger const& log, std::string* report = nullptr);

/// Runs a callable over [0, n) on up to `jobs` threads. Results must be
/// written by index; no ordering is implied.
void parallel_for(std::size_t n, unsigned jobs, std::function<void(std::size_t)> const& fn);

}  // namespace gridalign
