#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmd/dmd_core.hpp"
#include "pdmd/mode_select.hpp"
#include "pdmd/rank_selection.hpp"
#include "pdmd/recon_forecast.hpp"

namespace pdmd {

nlohmann::json rank_json(const TruncatedSvd& tsvd);
nlohmann::json spectrum_json(const DmdSpectrum& spectrum, const ReducedOperator& op, double dt);
nlohmann::json amplitudes_json(const SparseAmplitudes& amplitudes);
nlohmann::json trace_json(const SelectionTrace& trace);
nlohmann::json errors_json(const ErrorReport& report);

/// Columns: i, index, resnorm, res_scaled, zeta, delta.
void write_omp_trace_csv(const std::filesystem::path& path, const SelectionTrace& trace);
/// Columns: gamma, nnz, P_loss, iterations, converged.
void write_spdmd_csv(const std::filesystem::path& path, const std::vector<SpDmdResult>& results);
/// Columns: j, t, err. Undefined entries are written as "undefined".
void write_dynamic_error_csv(const std::filesystem::path& path, const ErrorReport& report);

/// Writes `value` indented by two spaces plus a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace pdmd
