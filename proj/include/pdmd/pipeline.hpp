#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmd/datasets.hpp"
#include "pdmd/dmd_core.hpp"
#include "pdmd/embedding.hpp"
#include "pdmd/error.hpp"
#include "pdmd/mode_select.hpp"
#include "pdmd/rank_selection.hpp"
#include "pdmd/recon_forecast.hpp"

namespace pdmd {

struct SelectionSpec {
  SelectionMethod method = SelectionMethod::Omp;
  /// spDMD penalties; empty means a default log grid of `grid_points` values.
  std::vector<double> gammas;
  Index grid_points = 50;

  /// "omp", "ls" (or "least_squares"), "spdmd" or "spdmd:<γ1>,<γ2>,...".
  static SelectionSpec parse(const std::string& text);
  std::string to_string() const;
};

struct InputSpec {
  /// Set for synthetic input; otherwise `file` is read.
  std::optional<SignalSpec> generator;
  std::filesystem::path file;
  /// File input only: columns after this index are held out as forecast truth.
  std::optional<Index> train_snapshots;
};

struct RunConfig {
  InputSpec input;
  std::optional<NoiseSpec> noise;
  RankCriterion rank = RankCriterion::hard_threshold();
  Index delay = 1;
  MethodChoice method = MethodChoice::Auto;
  SelectionSpec selection;
  bool pair_lock = true;
  Index forecast_horizon = 0;
  std::filesystem::path output = "pdmd_out";
  std::uint64_t seed = 0;
  MatrixFormat format = MatrixFormat::Csv;
};

/// Parses a config document (or a manifest, whose "config" entry is used).
/// Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

/// Checks everything that can be checked before touching data. Errors carry
/// the stage that owns the offending field.
void validate(const RunConfig& config);

struct PipelineInputs {
  /// Data the model is fit to (noise applied).
  SnapshotMatrix train;
  /// Clean counterpart of `train` used as reconstruction truth.
  SnapshotMatrix truth;
  /// Held-out truth for the forecast window; empty when there is none.
  SnapshotMatrix truth_forecast;
};

PipelineInputs load_inputs(const RunConfig& config);

enum class StopAfter { Inputs, Decompose, Select, Full };

struct PipelineResult {
  PipelineInputs inputs;
  TruncatedSvd tsvd;
  ReducedTrajectory traj;
  DelaySystem sys;
  Decomposition dec;
  AmplitudeProblem problem;
  SparseAmplitudes amplitudes;
  std::optional<SelectionTrace> trace;
  std::vector<SpDmdResult> sweep;
  DmdModel model;
  Evaluation recon;
  std::optional<Evaluation> forecast;
  ErrorReport errors;
  double selection_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Runs the pipeline in memory up to `stop`.
PipelineResult execute(const RunConfig& config, StopAfter stop = StopAfter::Full);

/// Writes the artifacts produced up to `stop` into `config.output`. Returns the
/// file names written.
std::vector<std::string> write_outputs(const RunConfig& config, const PipelineResult& result, StopAfter stop);

struct CompareRow {
  std::string method;
  std::optional<double> gamma;
  Index nnz = 0;
  double recon_pct = 0.0;
  std::optional<double> forecast_pct;
  double seconds = 0.0;
};

/// Runs each selection method on one shared decomposition. spDMD entries give
/// one row per γ; their wall time is the whole sweep.
std::vector<CompareRow> compare(const RunConfig& config, const std::vector<SelectionSpec>& methods);
void write_comparison(const std::filesystem::path& dir, const std::vector<CompareRow>& rows);

/// Process exit code for an error: 2 for invalid input or configuration, 3 for
/// unreadable data, 4 for numerical failures.
int exit_code(const Error& error);
nlohmann::json error_json(const Error& error);

std::string version();

}  // namespace pdmd
