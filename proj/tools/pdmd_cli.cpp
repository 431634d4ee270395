// Command-line front end for the parsimonious DMD pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdmd/error.hpp"
#include "pdmd/pipeline.hpp"
#include "pdmd/report.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<long> delay;
  std::optional<std::string> rank;
  std::optional<std::string> select;
  std::optional<std::string> method;
  std::optional<long> horizon;
  std::optional<std::string> input;
  std::optional<long> train_snapshots;
  bool pair_lock = false;
  bool no_pair_lock = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Run configuration (JSON or a previous manifest)");
  app->add_option("--seed", o.seed, "Noise seed");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--format", o.format, "Matrix file format")->check(CLI::IsMember({"csv", "binary"}));
  app->add_option("--delay", o.delay, "Time-delay embedding order d");
  app->add_option("--rank", o.rank, "Rank criterion: oht, oht:<eta>, energy:<eps> or fixed:<r>");
  app->add_option("--select", o.select, "Selection: omp, ls, spdmd or spdmd:<g1,g2,...>");
  app->add_option("--method", o.method, "Operator: auto, direct or tls")->check(CLI::IsMember({"auto", "direct", "tls"}));
  app->add_option("--horizon", o.horizon, "Forecast horizon in snapshots");
  app->add_option("--input", o.input, "Snapshot file (.csv or binary) instead of the generator");
  app->add_option("--train-snapshots", o.train_snapshots, "Leading snapshots of --input used for fitting");
  auto* lock = app->add_flag("--pair-lock", o.pair_lock, "Co-select conjugate partners in OMP (default)");
  app->add_flag("--no-pair-lock", o.no_pair_lock, "Plain OMP without conjugate co-selection")->excludes(lock);
}

pdmd::RunConfig build_config(const Overrides& o) {
  pdmd::RunConfig c = o.config.empty() ? pdmd::config_from_json(nlohmann::json::object()) : pdmd::load_config(o.config);
  auto parse = [](auto&& fn) {
    try {
      fn();
    } catch (const pdmd::Error& e) {
      throw e.stage().empty() ? e.with_stage("config") : e;
    }
  };
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.format) c.format = *o.format == "csv" ? pdmd::MatrixFormat::Csv : pdmd::MatrixFormat::Binary;
  if (o.delay) c.delay = *o.delay;
  if (o.rank) parse([&] { c.rank = pdmd::RankCriterion::parse(*o.rank); });
  if (o.select) {
    const pdmd::Index points = c.selection.grid_points;
    parse([&] { c.selection = pdmd::SelectionSpec::parse(*o.select); });
    c.selection.grid_points = points;
  }
  if (o.method)
    c.method = *o.method == "tls" ? pdmd::MethodChoice::Tls
               : *o.method == "direct" ? pdmd::MethodChoice::Direct
                                       : pdmd::MethodChoice::Auto;
  if (o.horizon) c.forecast_horizon = *o.horizon;
  if (o.input) {
    c.input.generator.reset();
    c.input.file = *o.input;
    c.input.train_snapshots.reset();
  }
  if (o.train_snapshots) c.input.train_snapshots = *o.train_snapshots;
  if (o.pair_lock) c.pair_lock = true;
  if (o.no_pair_lock) c.pair_lock = false;
  return c;
}

int report_failure(const pdmd::Error& e, const std::optional<std::filesystem::path>& dir) {
  const nlohmann::json doc = pdmd::error_json(e);
  std::cerr << doc.dump() << '\n';
  if (dir) {
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    if (!ec) {
      try {
        pdmd::write_json(*dir / "error.json", doc);
      } catch (const pdmd::Error&) {
      }
    }
  }
  return pdmd::exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parsimonious dynamic mode decomposition"};
  app.set_version_flag("--version", pdmd::version());
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::string> methods;
  struct Command {
    const char* name;
    const char* help;
    pdmd::StopAfter stop;
  };
  const Command commands[] = {
      {"generate", "Write synthetic snapshots (with noise) and their clean truth", pdmd::StopAfter::Inputs},
      {"decompose", "Truncate, embed and decompose; write rank, spectrum and modes", pdmd::StopAfter::Decompose},
      {"select", "Decompose and select mode amplitudes", pdmd::StopAfter::Select},
      {"forecast", "Full pipeline with a forecast (horizon defaults to the training length)", pdmd::StopAfter::Full},
      {"run", "Full pipeline", pdmd::StopAfter::Full},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, o);
    subs.emplace_back(sub, &cmd);
  }
  CLI::App* cmp = app.add_subcommand("compare", "Compare selection methods on one decomposition");
  add_common(cmp, o);
  cmp->add_option("--methods", methods, "Selections to compare, e.g. omp ls spdmd:1e3,1e4")->required();

  CLI11_PARSE(app, argc, argv);

  std::optional<std::filesystem::path> out_dir;
  if (o.out) out_dir = *o.out;
  try {
    pdmd::RunConfig config = build_config(o);
    out_dir = config.output;

    if (cmp->parsed()) {
      std::vector<pdmd::SelectionSpec> specs;
      for (const std::string& m : methods) specs.push_back(pdmd::SelectionSpec::parse(m));
      const auto rows = pdmd::compare(config, specs);
      pdmd::write_comparison(config.output, rows);
      for (const auto& row : rows)
        std::cout << row.method << (row.gamma ? " gamma=" + pdmd::format_double(*row.gamma) : "") << " nnz=" << row.nnz
                  << " recon%=" << row.recon_pct << '\n';
      return 0;
    }

    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      if (std::string(cmd->name) == "forecast" && config.forecast_horizon == 0) {
        if (!config.input.generator)
          throw pdmd::Error(pdmd::ErrorCode::InvalidArgument, "forecast needs --horizon for file input", "config");
        config.forecast_horizon = config.input.generator->snapshot_count();
      }
      const pdmd::PipelineResult result = pdmd::execute(config, cmd->stop);
      const auto files = pdmd::write_outputs(config, result, cmd->stop);
      std::cout << "wrote " << files.size() << " files to " << config.output.string() << '\n';
      if (cmd->stop == pdmd::StopAfter::Select || cmd->stop == pdmd::StopAfter::Full)
        std::cout << "selected " << result.amplitudes.nnz() << " of " << result.dec.spectrum.eigenvalues.size()
                  << " modes\n";
      if (cmd->stop == pdmd::StopAfter::Full) {
        std::cout << "reconstruction error " << result.errors.frobenius_recon_pct << " %\n";
        if (result.errors.frobenius_forecast_pct)
          std::cout << "forecast error " << *result.errors.frobenius_forecast_pct << " %\n";
      }
    }
    return 0;
  } catch (const pdmd::Error& e) {
    return report_failure(e, out_dir);
  } catch (const std::exception& e) {
    return report_failure(pdmd::Error(pdmd::ErrorCode::IoError, e.what(), "cli"), out_dir);
  }
}
