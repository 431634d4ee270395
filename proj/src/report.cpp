#include "pdmd/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "pdmd/error.hpp"

namespace pdmd {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// JSON has no infinities; they are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  return os;
}

std::string kind_name(RankKind kind) {
  switch (kind) {
    case RankKind::OptimalHardThreshold: return "optimal_hard_threshold";
    case RankKind::EnergyFraction: return "energy_fraction";
    case RankKind::Fixed: return "fixed";
  }
  return "unknown";
}

}  // namespace

json rank_json(const TruncatedSvd& tsvd) {
  const RankDecision& d = tsvd.decision;
  json j;
  j["criterion"] = d.criterion.to_string();
  j["kind"] = kind_name(d.criterion.kind);
  j["rank"] = tsvd.rank;
  j["beta"] = d.beta;
  j["transposed"] = d.transposed;
  j["threshold"] = d.threshold ? json(*d.threshold) : json(nullptr);
  j["floored"] = d.floored;
  j["warnings"] = d.warnings;
  j["singular_values"] = std::vector<double>(tsvd.full_singular_values.data(),
                                             tsvd.full_singular_values.data() + tsvd.full_singular_values.size());
  return j;
}

json spectrum_json(const DmdSpectrum& spectrum, const ReducedOperator& op, double dt) {
  json modes = json::array();
  for (Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
    const cdouble l = spectrum.eigenvalues[k];
    const cdouble w = k < spectrum.omega.size() ? spectrum.omega[k] : cdouble{};
    modes.push_back({{"index", k},
                     {"lambda_re", l.real()},
                     {"lambda_im", l.imag()},
                     {"abs_lambda", std::abs(l)},
                     {"omega_re", w.real()},
                     {"omega_im", w.imag()},
                     {"frequency_hz", w.imag() / (2.0 * std::numbers::pi)},
                     {"zero_eigenvalue", static_cast<bool>(spectrum.zero_eigenvalue[k])}});
  }
  return {{"method", to_string(op.method)},
          {"dt", dt},
          {"operator_dim", op.A.rows()},
          {"numerical_rank", op.numerical_rank},
          {"eigen_residual", number(spectrum.eigen_residual)},
          {"eigenvector_condition", number(spectrum.eigenvector_condition)},
          {"ill_conditioned", spectrum.ill_conditioned},
          {"warnings", op.warnings},
          {"modes", modes}};
}

json amplitudes_json(const SparseAmplitudes& amplitudes) {
  std::vector<bool> selected(amplitudes.b.size(), false);
  for (Index k : amplitudes.support) selected[k] = true;
  json modes = json::array();
  for (Index k = 0; k < amplitudes.b.size(); ++k) {
    const cdouble b = amplitudes.b[k];
    modes.push_back({{"index", k}, {"re", b.real()}, {"im", b.imag()}, {"abs", std::abs(b)}, {"selected", selected[k]}});
  }
  json j = {{"method", to_string(amplitudes.method)},
            {"nnz", amplitudes.nnz()},
            {"support", amplitudes.support},
            {"regularized", amplitudes.regularized},
            {"modes", modes}};
  if (amplitudes.method == SelectionMethod::SpDmd) j["gamma"] = amplitudes.gamma;
  return j;
}

json trace_json(const SelectionTrace& trace) {
  return {{"stop_iteration", trace.stop_iteration},
          {"argmin_iteration", trace.argmin_iteration},
          {"reason", trace.reason},
          {"argmin_support", trace.argmin_support}};
}

json errors_json(const ErrorReport& report) {
  std::vector<json> series;
  series.reserve(report.dynamic.err.size());
  for (std::size_t j = 0; j < report.dynamic.err.size(); ++j)
    series.push_back(report.dynamic.undefined[j] ? json(nullptr) : json(report.dynamic.err[j]));
  return {{"frobenius_recon_pct", report.frobenius_recon_pct},
          {"frobenius_forecast_pct",
           report.frobenius_forecast_pct ? json(*report.frobenius_forecast_pct) : json(nullptr)},
          {"split", report.split},
          {"dynamic_error", series}};
}

void write_omp_trace_csv(const std::filesystem::path& path, const SelectionTrace& trace) {
  auto os = open_out(path);
  os << "i,index,resnorm,res_scaled,zeta,delta\n";
  for (const OmpRecord& r : trace.records)
    os << r.iteration << ',' << r.index << ',' << format_double(r.resnorm) << ',' << format_double(r.res_scaled)
       << ',' << format_double(r.zeta) << ',' << format_double(r.delta) << '\n';
}

void write_spdmd_csv(const std::filesystem::path& path, const std::vector<SpDmdResult>& results) {
  auto os = open_out(path);
  os << "gamma,nnz,P_loss,iterations,converged\n";
  for (const SpDmdResult& r : results)
    os << format_double(r.gamma) << ',' << r.nnz() << ',' << format_double(r.performance_loss) << ','
       << r.iterations << ',' << (r.converged ? "true" : "false") << '\n';
}

void write_dynamic_error_csv(const std::filesystem::path& path, const ErrorReport& report) {
  auto os = open_out(path);
  os << "j,t,err\n";
  for (std::size_t j = 0; j < report.dynamic.err.size(); ++j) {
    os << j << ',' << format_double(report.t0 + static_cast<double>(j) * report.dt) << ',';
    if (report.dynamic.undefined[j])
      os << "undefined";
    else
      os << format_double(report.dynamic.err[j]);
    os << '\n';
  }
}

void write_json(const std::filesystem::path& path, const json& value) {
  auto os = open_out(path);
  os << value.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace pdmd
