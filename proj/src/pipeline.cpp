#include "pdmd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "pdmd/error.hpp"
#include "pdmd/report.hpp"

namespace pdmd {

using nlohmann::json;

std::string version() { return PDMD_VERSION; }

namespace {

// Runs `fn`, tagging any library error with `stage` unless it already has one.
template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::ConfigError, message, "config"); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error("'" + where + "' must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) config_error("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("bad or missing value for '" + key + "' in " + where);
  }
}

template <typename T>
void maybe(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) config_error("bad number '" + item + "' in list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

SignalSpec generator_from_json(const json& g) {
  const std::string where = "input.generator";
  const std::string kind = get<std::string>(g, "kind", where);
  SignalSpec spec;
  if (kind == "three_sine") {
    reject_unknown(g, {"kind", "sample_rate", "duration", "amplitudes", "frequencies_hz"}, where);
    spec.kind = SignalKind::ThreeSine;
    maybe(g, "sample_rate", where, spec.sample_rate);
    maybe(g, "duration", where, spec.duration);
    maybe(g, "amplitudes", where, spec.three_sine.amplitudes);
    maybe(g, "frequencies_hz", where, spec.three_sine.frequencies_hz);
  } else if (kind == "hidden_dynamics") {
    reject_unknown(g, {"kind", "sample_rate", "duration", "snapshots", "k1", "k2", "omega1", "omega2", "gamma1",
                       "gamma2", "grid"},
                   where);
    spec = default_hidden_spec();
    maybe(g, "duration", where, spec.duration);
    if (g.contains("snapshots") && g.contains("sample_rate")) config_error("give either snapshots or sample_rate");
    if (g.contains("snapshots")) spec.sample_rate = get<double>(g, "snapshots", where) / spec.duration;
    maybe(g, "sample_rate", where, spec.sample_rate);
    auto& h = spec.hidden;
    maybe(g, "k1", where, h.k1);
    maybe(g, "k2", where, h.k2);
    maybe(g, "omega1", where, h.omega1);
    maybe(g, "omega2", where, h.omega2);
    maybe(g, "gamma1", where, h.gamma1);
    maybe(g, "gamma2", where, h.gamma2);
    maybe(g, "grid", where, h.grid);
  } else {
    config_error("unknown generator kind '" + kind + "'");
  }
  return spec;
}

json generator_to_json(const SignalSpec& spec) {
  if (spec.kind == SignalKind::ThreeSine)
    return {{"kind", "three_sine"},
            {"sample_rate", spec.sample_rate},
            {"duration", spec.duration},
            {"amplitudes", spec.three_sine.amplitudes},
            {"frequencies_hz", spec.three_sine.frequencies_hz}};
  const auto& h = spec.hidden;
  return {{"kind", "hidden_dynamics"}, {"sample_rate", spec.sample_rate}, {"duration", spec.duration},
          {"k1", h.k1},  {"k2", h.k2},  {"omega1", h.omega1}, {"omega2", h.omega2}, {"gamma1", h.gamma1},
          {"gamma2", h.gamma2}, {"grid", h.grid}};
}

NoiseSpec noise_from_json(const json& n) {
  const std::string where = "noise";
  reject_unknown(n, {"kind", "variance", "density"}, where);
  const std::string kind = get<std::string>(n, "kind", where);
  NoiseSpec spec;
  if (kind == "gaussian")
    spec.kind = NoiseKind::Gaussian;
  else if (kind == "speckle")
    spec.kind = NoiseKind::Speckle;
  else if (kind == "salt_pepper")
    spec.kind = NoiseKind::SaltPepper;
  else
    config_error("unknown noise kind '" + kind + "'");
  maybe(n, "variance", where, spec.variance);
  maybe(n, "density", where, spec.density);
  return spec;
}

json noise_to_json(const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::Gaussian: return {{"kind", "gaussian"}, {"variance", spec.variance}};
    case NoiseKind::Speckle: return {{"kind", "speckle"}, {"variance", spec.variance}};
    case NoiseKind::SaltPepper: return {{"kind", "salt_pepper"}, {"density", spec.density}};
  }
  return {};
}

MethodChoice parse_method(const std::string& s) {
  if (s == "auto") return MethodChoice::Auto;
  if (s == "direct") return MethodChoice::Direct;
  if (s == "tls") return MethodChoice::Tls;
  config_error("unknown method '" + s + "' (expected auto, direct or tls)");
}

std::string method_name(MethodChoice m) {
  switch (m) {
    case MethodChoice::Auto: return "auto";
    case MethodChoice::Direct: return "direct";
    case MethodChoice::Tls: return "tls";
  }
  return "auto";
}

MatrixFormat parse_format(const std::string& s) {
  if (s == "csv") return MatrixFormat::Csv;
  if (s == "binary") return MatrixFormat::Binary;
  config_error("unknown format '" + s + "' (expected csv or binary)");
}

std::string extension(MatrixFormat f) { return f == MatrixFormat::Csv ? ".csv" : ".bin"; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SnapshotMatrix slice(const SnapshotMatrix& data, Index first, Index count) {
  SnapshotMatrix out;
  out.values = data.values.middleCols(first, count);
  out.dt = data.dt;
  out.grid = data.grid;
  return out;
}

}  // namespace

SelectionSpec SelectionSpec::parse(const std::string& text) {
  SelectionSpec s;
  if (text == "omp") {
    s.method = SelectionMethod::Omp;
  } else if (text == "ls" || text == "least_squares") {
    s.method = SelectionMethod::LeastSquares;
  } else if (text == "spdmd") {
    s.method = SelectionMethod::SpDmd;
  } else if (text.rfind("spdmd:", 0) == 0) {
    s.method = SelectionMethod::SpDmd;
    s.gammas = parse_list(text.substr(6));
    if (s.gammas.empty()) config_error("spdmd needs at least one gamma");
    for (double g : s.gammas)
      if (!(g > 0.0 && std::isfinite(g))) config_error("spdmd gammas must be positive");
  } else {
    config_error("unknown selection '" + text + "' (expected omp, ls, spdmd or spdmd:<list>)");
  }
  return s;
}

std::string SelectionSpec::to_string() const {
  switch (method) {
    case SelectionMethod::Omp: return "omp";
    case SelectionMethod::LeastSquares: return "ls";
    case SelectionMethod::SpDmd: {
      if (gammas.empty()) return "spdmd";
      std::string out = "spdmd:";
      for (std::size_t i = 0; i < gammas.size(); ++i) out += (i ? "," : "") + format_double(gammas[i]);
      return out;
    }
  }
  return "omp";
}

RunConfig config_from_json(const json& doc) {
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config")) config_error("manifest has no config entry");
    return config_from_json(doc.at("config"));
  }
  reject_unknown(doc, {"input", "noise", "rank", "delay", "method", "selection", "pair_lock", "forecast_horizon",
                       "spdmd_grid_points", "output", "seed", "format"},
                 "config");
  RunConfig c;
  if (doc.contains("input")) {
    const json& in = doc.at("input");
    reject_unknown(in, {"generator", "file", "train_snapshots"}, "input");
    if (in.contains("generator") == in.contains("file")) config_error("input needs exactly one of generator or file");
    if (in.contains("generator")) {
      c.input.generator = generator_from_json(in.at("generator"));
      if (in.contains("train_snapshots")) config_error("train_snapshots applies to file input only");
    } else {
      c.input.file = get<std::string>(in, "file", "input");
      if (in.contains("train_snapshots")) c.input.train_snapshots = get<Index>(in, "train_snapshots", "input");
    }
  } else {
    c.input.generator = SignalSpec{};
  }
  if (doc.contains("noise") && !doc.at("noise").is_null()) c.noise = noise_from_json(doc.at("noise"));
  if (doc.contains("rank")) c.rank = RankCriterion::parse(get<std::string>(doc, "rank", "config"));
  maybe(doc, "delay", "config", c.delay);
  if (doc.contains("method")) c.method = parse_method(get<std::string>(doc, "method", "config"));
  if (doc.contains("selection")) c.selection = SelectionSpec::parse(get<std::string>(doc, "selection", "config"));
  maybe(doc, "spdmd_grid_points", "config", c.selection.grid_points);
  maybe(doc, "pair_lock", "config", c.pair_lock);
  maybe(doc, "forecast_horizon", "config", c.forecast_horizon);
  if (doc.contains("output")) c.output = get<std::string>(doc, "output", "config");
  maybe(doc, "seed", "config", c.seed);
  if (doc.contains("format")) c.format = parse_format(get<std::string>(doc, "format", "config"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  return staged("config", [&] { return config_from_json(read_json(path)); });
}

json config_to_json(const RunConfig& c) {
  json in;
  if (c.input.generator) {
    in["generator"] = generator_to_json(*c.input.generator);
  } else {
    in["file"] = c.input.file.string();
    if (c.input.train_snapshots) in["train_snapshots"] = *c.input.train_snapshots;
  }
  return {{"input", in},
          {"noise", c.noise ? noise_to_json(*c.noise) : json(nullptr)},
          {"rank", c.rank.to_string()},
          {"delay", c.delay},
          {"method", method_name(c.method)},
          {"selection", c.selection.to_string()},
          {"spdmd_grid_points", c.selection.grid_points},
          {"pair_lock", c.pair_lock},
          {"forecast_horizon", c.forecast_horizon},
          {"output", c.output.string()},
          {"seed", c.seed},
          {"format", c.format == MatrixFormat::Csv ? "csv" : "binary"}};
}

void validate(const RunConfig& c) {
  if (c.input.generator) {
    const SignalSpec& g = *c.input.generator;
    if (!(g.duration > 0.0 && g.sample_rate > 0.0 && std::isfinite(g.duration) && std::isfinite(g.sample_rate)))
      throw Error(ErrorCode::InvalidArgument, "generator needs positive duration and sample rate", "datasets");
  } else if (c.input.file.empty()) {
    throw Error(ErrorCode::ConfigError, "no input given", "config");
  }
  if (c.input.train_snapshots && *c.input.train_snapshots < 2)
    throw Error(ErrorCode::InvalidArgument, "train_snapshots must be at least 2", "datasets");
  if (c.noise) {
    if (c.noise->kind == NoiseKind::SaltPepper ? !(c.noise->density >= 0.0 && c.noise->density <= 1.0)
                                               : !(c.noise->variance >= 0.0 && std::isfinite(c.noise->variance)))
      throw Error(ErrorCode::InvalidArgument, "noise parameters out of range", "datasets");
  }
  staged("rank_selection", [&] { c.rank.validate(); });
  if (c.delay < 1) throw Error(ErrorCode::InvalidArgument, "delay order must be at least 1", "embedding");
  if (c.input.generator) {
    const Index m = c.input.generator->snapshot_count();
    staged("embedding", [&] { validate_delay(c.delay, m); });
  }
  if (c.forecast_horizon < 0) throw Error(ErrorCode::InvalidArgument, "forecast horizon must be nonnegative", "recon_forecast");
  if (c.selection.method == SelectionMethod::SpDmd && c.selection.gammas.empty() && c.selection.grid_points < 1)
    throw Error(ErrorCode::InvalidArgument, "spdmd grid needs at least one point", "mode_select");
}

PipelineInputs load_inputs(const RunConfig& c) {
  PipelineInputs in;
  const Index H = c.forecast_horizon;
  if (c.input.generator) {
    staged("datasets", [&] {
      SignalSpec spec = *c.input.generator;
      const Index m = spec.snapshot_count();
      if (H > 0) spec.duration *= static_cast<double>(m + H) / static_cast<double>(m);
      const SnapshotMatrix all = generate(spec);
      if (all.cols() != m + H) throw Error(ErrorCode::InvalidArgument, "forecast window does not fit the sample grid");
      in.truth = slice(all, 0, m);
      if (H > 0) in.truth_forecast = slice(all, m, H);
    });
  } else {
    staged("datasets", [&] {
      const SnapshotMatrix all = load_matrix(c.input.file, format_from_path(c.input.file));
      const Index m = c.input.train_snapshots.value_or(all.cols());
      if (m > all.cols()) throw Error(ErrorCode::DimensionMismatch, "train_snapshots exceeds the file's snapshot count");
      const Index held = all.cols() - m;
      if (H > held) throw Error(ErrorCode::DimensionMismatch, "forecast horizon exceeds the held-out snapshots");
      in.truth = slice(all, 0, m);
      if (held > 0) in.truth_forecast = slice(all, m, H > 0 ? H : held);
    });
  }
  in.truth_forecast.dt = in.truth.dt;
  in.train = in.truth;
  if (c.noise) {
    NoiseSpec noise = *c.noise;
    noise.seed = c.seed;
    in.train = staged("datasets", [&] { return add_noise(in.truth, noise); });
  }
  staged("datasets", [&] { in.train.validate(); });
  return in;
}

namespace {

void select_amplitudes(const RunConfig& c, PipelineResult& r) {
  const SelectionSpec& sel = c.selection;
  switch (sel.method) {
    case SelectionMethod::LeastSquares: r.amplitudes = least_squares_amplitudes(r.problem); break;
    case SelectionMethod::Omp: {
      OmpOptions opt;
      opt.pair_lock = c.pair_lock;
      OmpResult omp = omp_select(r.problem, opt);
      r.amplitudes = std::move(omp.amplitudes);
      r.trace = std::move(omp.trace);
      break;
    }
    case SelectionMethod::SpDmd: {
      const std::vector<double> gammas = sel.gammas.empty() ? gamma_grid(r.problem, sel.grid_points) : sel.gammas;
      r.sweep = spdmd_admm(r.problem, gammas);
      // The model uses the first listed penalty.
      r.amplitudes = r.sweep.front().amplitudes;
      break;
    }
  }
}

}  // namespace

PipelineResult execute(const RunConfig& c, StopAfter stop) {
  const auto start = std::chrono::steady_clock::now();
  validate(c);
  PipelineResult r;
  r.inputs = load_inputs(c);
  if (stop == StopAfter::Inputs) {
    r.total_seconds = seconds_since(start);
    return r;
  }

  r.tsvd = staged("rank_selection", [&] { return truncate(compute_svd(r.inputs.train.values), c.rank); });
  r.traj = staged("embedding", [&] { return pod_project(r.inputs.train, r.tsvd); });
  r.sys = staged("embedding", [&] { return hankel_embed(r.traj, c.delay); });
  r.dec = staged("dmd_core", [&] { return decompose(r.traj, r.sys, c.method); });
  if (stop == StopAfter::Decompose) {
    r.total_seconds = seconds_since(start);
    return r;
  }

  staged("mode_select", [&] {
    r.problem = build_amplitude_problem(r.dec.spectrum.modes, r.dec.spectrum.eigenvalues, r.sys.x1());
    const auto sel_start = std::chrono::steady_clock::now();
    select_amplitudes(c, r);
    r.selection_seconds = seconds_since(sel_start);
  });
  if (stop == StopAfter::Select) {
    r.total_seconds = seconds_since(start);
    return r;
  }

  staged("recon_forecast", [&] {
    r.model = make_model(r.traj, r.sys, r.dec.spectrum, r.amplitudes.b);
    r.recon = reconstruct_training(r.model);
    Mat fc_values(r.inputs.truth.rows(), 0);
    const Index H = r.inputs.truth_forecast.cols();
    if (H > 0) {
      r.forecast = pdmd::forecast(r.model, H);
      fc_values = r.forecast->snapshots.values;
    }
    r.errors = make_error_report(r.inputs.truth.values, r.recon.snapshots.values, r.inputs.truth_forecast.values,
                                 fc_values, r.model.dt, r.model.t0);
  });
  r.total_seconds = seconds_since(start);
  return r;
}

std::vector<std::string> write_outputs(const RunConfig& c, const PipelineResult& r, StopAfter stop) {
  return staged("report", [&] {
    std::filesystem::create_directories(c.output);
    const auto dir = c.output;
    const std::string ext = extension(c.format);
    std::vector<std::string> files;
    auto matrix = [&](const std::string& name, const Mat& values, double dt) {
      SnapshotMatrix m;
      m.values = values;
      m.dt = dt;
      save_matrix(m, dir / (name + ext), c.format);
      files.push_back(name + ext);
    };
    auto doc = [&](const std::string& name, const json& value) {
      write_json(dir / name, value);
      files.push_back(name);
    };

    if (stop == StopAfter::Inputs) {
      matrix("snapshots", r.inputs.train.values, r.inputs.train.dt);
      matrix("truth", r.inputs.truth.values, r.inputs.truth.dt);
      if (r.inputs.truth_forecast.cols() > 0)
        matrix("truth_forecast", r.inputs.truth_forecast.values, r.inputs.truth_forecast.dt);
    } else {
      const DmdSpectrum& sp = r.dec.spectrum;
      doc("rank.json", rank_json(r.tsvd));
      doc("spectrum.json", spectrum_json(sp, r.dec.op, r.sys.dt));
      matrix("modes_real", sp.physical_modes.real(), r.sys.dt);
      matrix("modes_imag", sp.physical_modes.imag(), r.sys.dt);
    }
    if (stop == StopAfter::Select || stop == StopAfter::Full) {
      json amps = amplitudes_json(r.amplitudes);
      if (r.trace) amps["omp"] = trace_json(*r.trace);
      doc("amplitudes.json", amps);
      if (r.trace) {
        write_omp_trace_csv(dir / "omp_trace.csv", *r.trace);
        files.push_back("omp_trace.csv");
      }
      if (!r.sweep.empty()) {
        write_spdmd_csv(dir / "spdmd.csv", r.sweep);
        files.push_back("spdmd.csv");
      }
    }
    if (stop == StopAfter::Full) {
      matrix("reconstruction", r.recon.snapshots.values, r.model.dt);
      if (r.forecast) matrix("forecast", r.forecast->snapshots.values, r.model.dt);
      json errs = errors_json(r.errors);
      errs["imag_fraction"] = r.recon.imag_fraction;
      errs["diverged"] = r.recon.diverged || (r.forecast && r.forecast->diverged);
      doc("errors.json", errs);
      write_dynamic_error_csv(dir / "dynamic_error.csv", r.errors);
      files.push_back("dynamic_error.csv");
    }

    write_json(dir / "timings.json", {{"selection_seconds", r.selection_seconds}, {"total_seconds", r.total_seconds}});
    files.push_back("timings.json");

    json manifest = {{"manifest_version", 1},
                     {"pdmd_version", version()},
                     {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                           "." + std::to_string(EIGEN_MINOR_VERSION)},
                     {"config", config_to_json(c)},
                     {"seed", c.seed}};
    if (stop != StopAfter::Inputs) {
      manifest["rank"] = r.tsvd.rank;
      manifest["operator_method"] = to_string(r.dec.op.method);
      manifest["mode_count"] = r.dec.spectrum.eigenvalues.size();
    }
    if (stop == StopAfter::Select || stop == StopAfter::Full) {
      manifest["selection"] = to_string(r.amplitudes.method);
      manifest["selected_mode_count"] = r.amplitudes.nnz();
      manifest["selected_modes"] = r.amplitudes.support;
    }
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    write_json(dir / "manifest.json", manifest);
    return files;
  });
}

std::vector<CompareRow> compare(const RunConfig& c, const std::vector<SelectionSpec>& methods) {
  if (methods.size() < 2) throw Error(ErrorCode::InvalidArgument, "compare needs at least two methods", "config");
  PipelineResult base = execute(c, StopAfter::Decompose);
  staged("mode_select", [&] {
    base.problem = build_amplitude_problem(base.dec.spectrum.modes, base.dec.spectrum.eigenvalues, base.sys.x1());
  });

  std::vector<CompareRow> rows;
  for (const SelectionSpec& spec : methods) {
    RunConfig sub = c;
    sub.selection = spec;
    PipelineResult r = base;
    const auto start = std::chrono::steady_clock::now();
    staged("mode_select", [&] { select_amplitudes(sub, r); });
    const double elapsed = std::max(seconds_since(start), std::numeric_limits<double>::min());

    auto evaluate = [&](const CVec& b) {
      return staged("recon_forecast", [&] {
        const DmdModel model = make_model(r.traj, r.sys, r.dec.spectrum, b);
        CompareRow row;
        row.recon_pct = frobenius_error(r.inputs.truth.values, reconstruct_training(model).snapshots.values);
        const Index H = r.inputs.truth_forecast.cols();
        if (H > 0)
          row.forecast_pct = frobenius_error(r.inputs.truth_forecast.values, forecast(model, H).snapshots.values);
        return row;
      });
    };

    if (spec.method == SelectionMethod::SpDmd) {
      for (const SpDmdResult& s : r.sweep) {
        CompareRow row = evaluate(s.amplitudes.b);
        row.method = "spdmd";
        row.gamma = s.gamma;
        row.nnz = s.nnz();
        row.seconds = elapsed;
        rows.push_back(row);
      }
    } else {
      CompareRow row = evaluate(r.amplitudes.b);
      row.method = spec.to_string();
      row.nnz = r.amplitudes.nnz();
      row.seconds = elapsed;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_comparison(const std::filesystem::path& dir, const std::vector<CompareRow>& rows) {
  staged("report", [&] {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "comparison.csv", std::ios::binary);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write comparison.csv");
    csv << "method,gamma,nnz,recon_pct,forecast_pct,seconds\n";
    json table = json::array();
    for (const CompareRow& row : rows) {
      csv << row.method << ',' << (row.gamma ? format_double(*row.gamma) : "") << ',' << row.nnz << ','
          << format_double(row.recon_pct) << ',' << (row.forecast_pct ? format_double(*row.forecast_pct) : "") << ','
          << format_double(row.seconds) << '\n';
      table.push_back({{"method", row.method},
                       {"gamma", row.gamma ? json(*row.gamma) : json(nullptr)},
                       {"nnz", row.nnz},
                       {"recon_pct", row.recon_pct},
                       {"forecast_pct", row.forecast_pct ? json(*row.forecast_pct) : json(nullptr)},
                       {"seconds", row.seconds}});
    }
    write_json(dir / "comparison.json", table);
  });
}

int exit_code(const Error& error) {
  switch (error.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::MalformedFile:
    case ErrorCode::IoError:
    case ErrorCode::NonFiniteData: return 3;
    case ErrorCode::NonConvergence:
    case ErrorCode::SingularSystem: return 4;
  }
  return 1;
}

json error_json(const Error& error) {
  return {{"error", {{"stage", error.stage()}, {"code", std::string(to_string(error.code()))}, {"message", error.what()}}}};
}

}  // namespace pdmd
