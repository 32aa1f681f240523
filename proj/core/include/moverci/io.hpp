#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "moverci/binary.hpp"
#include "moverci/simulate.hpp"
#include "moverci/survival.hpp"
#include "moverci/types.hpp"

namespace moverci {

enum class OutputFormat { Table, Csv, Json };

/// Fully resolved run request; every field has a documented default
/// (level 0.95, MH weights, all methods, both scales, table output).
struct RunConfig {
  enum class Command { AnalyzeBinary, AnalyzeSurvival, Simulate };
  Command command = Command::AnalyzeBinary;

  std::string input_path;
  std::string external_ci_path;  // survival: injected one-sample CIs (JSON)
  WeightScheme scheme = WeightScheme::Mh;
  std::vector<double> fixed_weights;
  std::set<MethodId> methods;  // empty = every method valid for the endpoint
  std::vector<Scale> scales = {Scale::Difference, Scale::Ratio};
  double level = 0.95;

  SurvivalMeasure measure = SurvivalMeasure::Rmst;
  double timepoint = 0.0;

  ZeroCellPolicy policy = ZeroCellPolicy::None;

  int example = 0;             // simulate: study grid id (3..6)
  std::string scenario_path;   // simulate: scenario JSON file
  long replicates = 100000;
  bool replicates_set = false;  // explicit --replicates overrides scenario files
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0 = MOVERCI_THREADS env or hardware concurrency

  OutputFormat format = OutputFormat::Table;
  std::string output_path;  // empty = stdout
};

// ---- ingestion ---------------------------------------------------------------

/// CSV with header `stratum,group,events,total`, group in {0,1}. Strata are
/// ordered by first appearance; row order within the file is otherwise free.
std::vector<BinaryStratum> parse_binary_csv(const std::string& path);
std::vector<BinaryStratum> parse_binary_csv_text(const std::string& text,
                                                 const std::string& name = "<memory>");

/// CSV with header `time,event,group,stratum`; event in {0,1}.
std::vector<SurvivalRecord> parse_survival_csv(const std::string& path);
std::vector<SurvivalRecord> parse_survival_csv_text(const std::string& text,
                                                    const std::string& name = "<memory>");

/// JSON array of {stratum, group, estimate, lower, upper, level, variance?, n?}.
/// Each stratum needs both groups.
ExternalCis parse_external_cis_json(const std::string& path);
ExternalCis parse_external_cis_json_text(const std::string& text);

/// One scenario object or an array of them.
std::vector<Scenario> parse_scenarios_json(const std::string& path);
std::vector<Scenario> parse_scenarios_json_text(const std::string& text);

// ---- emission ----------------------------------------------------------------

/// Full-precision JSON; an infinite upper limit serializes as the string "inf".
std::string effect_results_to_json(const std::vector<EffectResult>& results,
                                   const std::vector<MethodFailure>& failures = {});
std::vector<EffectResult> effect_results_from_json(const std::string& text);

std::string effect_results_to_csv(const std::vector<EffectResult>& results);

/// Aligned human table, numbers at 3 decimals.
std::string effect_results_to_table(const std::vector<EffectResult>& results,
                                    const std::vector<MethodFailure>& failures = {});

/// Columns: scenario_id, method, metric, rate, mcse, replicates, excluded.
std::string sim_reports_to_csv(const std::vector<SimReport>& reports);
std::string sim_reports_to_table(const std::vector<SimReport>& reports);

// ---- orchestration -----------------------------------------------------------

/// Runs a config end to end. Exit code 0 on success, 2 on input errors, 3 when
/// any requested method was incomputable (results for the others are still
/// emitted).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace moverci
