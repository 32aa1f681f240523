// moverci: stratified MOVER confidence intervals for difference and ratio
// effect parameters, plus the Monte Carlo study harness.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moverci/io.hpp"

namespace {

using moverci::RunConfig;

void add_common_analysis_flags(CLI::App* cmd, RunConfig& config, std::string& scheme,
                               std::vector<std::string>& methods, std::string& metric,
                               std::string& format) {
  cmd->add_option("--scheme", scheme, "Weight scheme: mh | inv | mr | fixed")
      ->default_val("mh");
  cmd->add_option("--weights", config.fixed_weights,
                  "Fixed stratum weights (with --scheme fixed)")
      ->delimiter(',');
  cmd->add_option("--methods", methods,
                  "Methods to run (comma separated, or 'all')")
      ->delimiter(',');
  cmd->add_option("--level", config.level, "Confidence level (1 - alpha)")
      ->default_val(0.95);
  cmd->add_option("--metric", metric, "Effect scale: rd | rr | both")
      ->default_val("both");
  cmd->add_option("--output", format, "Output format: table | csv | json")
      ->default_val("table");
  cmd->add_option("--out", config.output_path, "Write the report to a file");
}

moverci::OutputFormat parse_format(const std::string& format) {
  if (format == "table") return moverci::OutputFormat::Table;
  if (format == "csv") return moverci::OutputFormat::Csv;
  if (format == "json") return moverci::OutputFormat::Json;
  throw CLI::ValidationError("--output must be table, csv or json");
}

void finalize_common(RunConfig& config, const std::string& scheme,
                     const std::vector<std::string>& methods,
                     const std::string& metric, const std::string& format) {
  config.scheme = moverci::scheme_from_name(scheme);
  config.format = parse_format(format);
  if (metric == "rd")
    config.scales = {moverci::Scale::Difference};
  else if (metric == "rr")
    config.scales = {moverci::Scale::Ratio};
  else if (metric == "both")
    config.scales = {moverci::Scale::Difference, moverci::Scale::Ratio};
  else
    throw CLI::ValidationError("--metric must be rd, rr or both");
  for (const std::string& m : methods) {
    if (m == "all") {
      config.methods.clear();
      break;
    }
    config.methods.insert(moverci::method_from_name(m));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stratified MOVER confidence intervals and simulation harness"};
  app.require_subcommand(1);

  RunConfig config;

  // analyze-binary
  auto* binary = app.add_subcommand(
      "analyze-binary", "Stratified two-group binomial analysis from a CSV "
                        "(header: stratum,group,events,total)");
  std::string b_scheme, b_metric, b_format, b_policy{"none"};
  std::vector<std::string> b_methods;
  binary->add_option("--input", config.input_path, "Input CSV path")->required();
  add_common_analysis_flags(binary, config, b_scheme, b_methods, b_metric, b_format);
  binary->add_option("--zero-cell", b_policy,
                     "Zero-cell policy for INV/MR weights: none | half-event")
      ->default_val("none");

  // analyze-survival
  auto* survival = app.add_subcommand(
      "analyze-survival", "Stratified milestone-survival or RMST analysis "
                          "(CSV header: time,event,group,stratum)");
  std::string s_scheme, s_metric, s_format;
  std::vector<std::string> s_methods;
  double milestone_t = 0.0, horizon = 0.0;
  survival->add_option("--input", config.input_path, "Survival records CSV");
  survival->add_option("--external-ci", config.external_ci_path,
                       "Injected one-sample CIs (JSON)");
  auto* opt_milestone =
      survival->add_option("--milestone", milestone_t, "KM survival at this time");
  auto* opt_horizon =
      survival->add_option("--horizon", horizon, "RMST over [0, horizon]");
  opt_milestone->excludes(opt_horizon);
  add_common_analysis_flags(survival, config, s_scheme, s_methods, s_metric, s_format);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo coverage / type-I-error studies");
  std::string sim_format{"csv"};
  simulate->add_option("--example", config.example,
                       "Built-in study grid: 3, 4, 5 or 6");
  simulate->add_option("--scenario", config.scenario_path, "Scenario JSON file");
  auto* opt_reps =
      simulate->add_option("--replicates", config.replicates, "Replicates per scenario")
          ->default_val(100000);
  auto* opt_seed = simulate->add_option("--seed", config.seed, "Base RNG seed")
                       ->default_val(0);
  simulate->add_option("--threads", config.threads,
                       "Worker threads (default: MOVERCI_THREADS or hardware)");
  simulate->add_option("--output", sim_format, "Output format: csv | table")
      ->default_val("csv");
  simulate->add_option("--out", config.output_path, "Write the report to a file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (binary->parsed()) {
      config.command = RunConfig::Command::AnalyzeBinary;
      finalize_common(config, b_scheme, b_methods, b_metric, b_format);
      if (b_policy == "none")
        config.policy = moverci::ZeroCellPolicy::None;
      else if (b_policy == "half-event")
        config.policy = moverci::ZeroCellPolicy::HalfEvent;
      else
        throw CLI::ValidationError("--zero-cell must be none or half-event");
    } else if (survival->parsed()) {
      config.command = RunConfig::Command::AnalyzeSurvival;
      finalize_common(config, s_scheme, s_methods, s_metric, s_format);
      if (opt_milestone->count() > 0) {
        config.measure = moverci::SurvivalMeasure::Milestone;
        config.timepoint = milestone_t;
      } else if (opt_horizon->count() > 0) {
        config.measure = moverci::SurvivalMeasure::Rmst;
        config.timepoint = horizon;
      }
    } else {
      config.command = RunConfig::Command::Simulate;
      config.replicates_set = opt_reps->count() > 0;
      config.seed_set = opt_seed->count() > 0;
      config.format = sim_format == "table" ? moverci::OutputFormat::Table
                                            : moverci::OutputFormat::Csv;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const moverci::MoverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  return moverci::run(config, std::cout, std::cerr);
}
