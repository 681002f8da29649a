#pragma once

// File formats: LaunchSet / SimplexSet JSON, metrics JSON, sweep CSV and
// run manifests. Floating values in text formats use 17 significant digits.

#include <filesystem>
#include <string>

#include "json.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/optimizer.hpp"
#include "stokesopt/vector_sets.hpp"

namespace stokesopt {

/// {"n", "family", "meta", "vectors": [[[re, im], ...], ...]}
nlohmann::json launch_set_to_json(const LaunchSet& set);
nlohmann::json simplex_set_to_json(const SimplexSet& set);

/// Throws ParseError naming the offending field. States whose norm is within
/// kLoadNormTolerance of 1 are renormalized; larger deviations are rejected.
LaunchSet launch_set_from_json(const nlohmann::json& doc);
SimplexSet simplex_set_from_json(const nlohmann::json& doc);
inline constexpr double kLoadNormTolerance = 1e-6;

nlohmann::json metrics_to_json(const SetMetrics& m);
nlohmann::json run_summary_to_json(const StartSummary& s);

/// Throws IoError (unreadable) or ParseError (malformed JSON).
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

LaunchSet read_launch_set(const std::filesystem::path& path);
void write_launch_set(const std::filesystem::path& path, const LaunchSet& set);

/// printf("%.17g").
std::string format_double(double v);

std::string sweep_csv_header();
std::string sweep_csv_row(int n, const std::string& family, double xi, double penalty_db, double condition_number,
                          double log_volume);

std::string trajectory_csv(const std::vector<TrajectorySample>& samples);

}  // namespace stokesopt
