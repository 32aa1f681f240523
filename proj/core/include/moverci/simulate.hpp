#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moverci/binary.hpp"
#include "moverci/types.hpp"

namespace moverci {

enum class Metric { Rd, Rr };

const char* metric_name(Metric metric);
Metric metric_from_name(const std::string& name);

/// What a study estimates: CI coverage of the truth, or rejection of
/// H0: RD = 0 (type I error / power).
enum class SimStatistic { Coverage, Rejection };

/// The method set the paper's studies run per metric/scheme (DC joins only
/// under MH weights).
std::set<MethodId> default_sim_methods(Metric metric, WeightScheme scheme);

/// One simulation design cell. `effect` holds either a single entry (constant
/// effect across strata) or one entry per stratum; on the RD metric
/// p_s1 = p_s0 + effect_s, on the RR metric p_s1 = p_s0 * effect_s.
struct Scenario {
  std::string id;
  std::vector<double> rates0;
  std::vector<double> effect{0.0};
  std::vector<std::pair<int, int>> sizes;  // (n_s0, n_s1) per stratum
  WeightScheme scheme = WeightScheme::Mh;
  std::set<MethodId> methods;
  Metric metric = Metric::Rd;
  double level = 0.95;
  long replicates = 100000;
  std::uint64_t seed = 0;
  ZeroCellPolicy policy = ZeroCellPolicy::HalfEvent;
  SimStatistic statistic = SimStatistic::Coverage;
  std::optional<double> target;  // truth override

  std::size_t strata() const { return rates0.size(); }
  double effect_for(std::size_t s) const {
    return effect.size() == 1 ? effect[0] : effect.at(s);
  }
  /// Implied treated-arm rates; validated to lie in [0,1].
  std::vector<double> rates1() const;
  /// Coverage target: the constant effect when it is constant, otherwise the
  /// MH-pooled difference (RD) or the ratio of MH-pooled proportions (RR).
  double truth() const;
};

struct MethodReport {
  MethodId method = MethodId::Av;
  double rate = 0.0;   // coverage or rejection fraction
  double mcse = 0.0;   // sqrt(rate (1-rate) / used)
  long used = 0;       // replicates entering the denominator
  long excluded = 0;   // incomputable replicates
};

struct SimReport {
  std::string scenario_id;
  std::string statistic;  // "coverage" or "rejection"
  Metric metric = Metric::Rd;
  WeightScheme scheme = WeightScheme::Mh;
  double target = 0.0;
  long replicates = 0;
  long regenerations = 0;
  std::vector<MethodReport> methods;
};

/// Deterministic per-replicate substream key (splitmix64 mixing).
std::uint64_t substream_seed(std::uint64_t seed, long replicate_index);

/// Binomial draws for every stratum x group cell, regenerated until the
/// metric's event condition holds (RD: at least one event in the study;
/// RR: at least one event in each group). Deterministic in
/// (scenario.seed, replicate_index). `regenerations`, when given, is
/// incremented once per discarded draw. Throws RegenerationLimit after 1e6
/// attempts.
std::vector<BinaryStratum> generate_dataset(const Scenario& scenario,
                                            long replicate_index,
                                            long* regenerations = nullptr);

/// Fraction of replicates whose CI covers the truth target, per method, with
/// Monte Carlo standard errors. Incomputable replicates are excluded from that
/// method's denominator and counted. `threads` = 0 reads MOVERCI_THREADS or
/// falls back to the hardware concurrency; the result is bit-identical
/// regardless of the worker count.
SimReport coverage_study(const Scenario& scenario, int threads = 0);

/// Rejection rate of H0: RD = 0 (the CI excludes 0), per method. RD metric
/// only. MR-weighted CIs carry the continuity correction before the test.
SimReport test_study(const Scenario& scenario, int threads = 0);

/// Materializes the factorial designs of the four simulation studies
/// (example_id in {3,4,5,6}). Throws UnknownExample otherwise.
std::vector<Scenario> scenario_grid(int example_id);

}  // namespace moverci
