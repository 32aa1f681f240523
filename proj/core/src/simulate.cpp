#include "moverci/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include <boost/random/binomial_distribution.hpp>

namespace moverci {

namespace {

constexpr long kRegenerationCap = 1000000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void check_scenario(const Scenario& sc) {
  require(!sc.rates0.empty(), ErrorCode::EmptyStrata, "scenario has no strata");
  require(sc.sizes.size() == sc.rates0.size(), ErrorCode::DimensionMismatch,
          "scenario sizes/rates strata mismatch");
  require(sc.effect.size() == 1 || sc.effect.size() == sc.rates0.size(),
          ErrorCode::DimensionMismatch,
          "effect must be a scalar or one entry per stratum");
  require(sc.replicates > 0, ErrorCode::InvalidArgument, "replicates must be positive");
  for (auto [n0, n1] : sc.sizes)
    require(n0 > 0 && n1 > 0, ErrorCode::InvalidArgument, "cell sizes must be positive");
  (void)sc.rates1();
}

int thread_count(int requested, long replicates) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("MOVERCI_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, 32);
  const long per = std::max<long>(1, replicates / 1024);
  return static_cast<int>(std::min<long>(n, per));
}

struct Counters {
  long covered = 0;
  long rejected = 0;
  long excluded = 0;
};

struct StudyTotals {
  std::vector<Counters> per_method;
  long regenerations = 0;
};

/// One replicate: generate, analyze with the scenario's scheme/policy, tally.
void run_replicate(const Scenario& sc, const std::vector<MethodId>& methods,
                   long index, double target, StudyTotals& totals) {
  std::vector<BinaryStratum> data = generate_dataset(sc, index, &totals.regenerations);
  const Scale scale = sc.metric == Metric::Rd ? Scale::Difference : Scale::Ratio;
  BinaryAnalysis analysis;
  bool batch_failed = false;
  try {
    analysis = analyze_binary(data, sc.scheme,
                              std::set<MethodId>(methods.begin(), methods.end()),
                              {scale}, sc.level, sc.policy);
  } catch (const MoverError&) {
    batch_failed = true;  // e.g. weight resolution degenerate for this draw
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (batch_failed) {
      ++totals.per_method[m].excluded;
      continue;
    }
    const EffectResult* found = nullptr;
    for (const EffectResult& r : analysis.results) {
      if (r.method == methods[m]) {
        found = &r;
        break;
      }
    }
    if (!found) {
      ++totals.per_method[m].excluded;
      continue;
    }
    if (found->ci.contains(target)) ++totals.per_method[m].covered;
    if (!found->ci.contains(0.0)) ++totals.per_method[m].rejected;
  }
}

SimReport run_study(const Scenario& sc, bool rejection, int threads) {
  check_scenario(sc);
  require(!sc.methods.empty(), ErrorCode::InvalidArgument, "no methods requested");
  if (rejection)
    require(sc.metric == Metric::Rd, ErrorCode::InvalidArgument,
            "the rejection study tests H0: RD = 0 and needs the RD metric");
  const Scale scale = sc.metric == Metric::Rd ? Scale::Difference : Scale::Ratio;
  std::vector<MethodId> methods;
  for (MethodId m : sc.methods) {
    require(method_valid_for(m, scale), ErrorCode::InvalidArgument,
            std::string(method_name(m)) + " is not defined on the " +
                scale_name(scale) + " scale");
    require(m != MethodId::Dc || sc.scheme == WeightScheme::Mh,
            ErrorCode::InvalidArgument, "DC is defined for MH weights only");
    methods.push_back(m);
  }
  const double target = sc.target ? *sc.target : sc.truth();

  const int workers = thread_count(threads, sc.replicates);
  std::vector<StudyTotals> chunks(workers);
  for (StudyTotals& c : chunks) c.per_method.resize(methods.size());

  auto work = [&](int worker) {
    // Striding by worker count keeps the partition deterministic; the totals
    // are integer sums, so any partition gives identical results anyway.
    for (long i = worker; i < sc.replicates; i += workers)
      run_replicate(sc, methods, i, target, chunks[worker]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }

  SimReport report;
  report.scenario_id = sc.id;
  report.statistic = rejection ? "rejection" : "coverage";
  report.metric = sc.metric;
  report.scheme = sc.scheme;
  report.target = rejection ? 0.0 : target;
  report.replicates = sc.replicates;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodReport mr;
    mr.method = methods[m];
    long hits = 0;
    for (const StudyTotals& c : chunks) {
      hits += rejection ? c.per_method[m].rejected : c.per_method[m].covered;
      mr.excluded += c.per_method[m].excluded;
    }
    mr.used = sc.replicates - mr.excluded;
    mr.rate = mr.used > 0 ? static_cast<double>(hits) / mr.used : 0.0;
    mr.mcse = mr.used > 0 ? std::sqrt(mr.rate * (1.0 - mr.rate) / mr.used) : 0.0;
    report.methods.push_back(mr);
  }
  for (const StudyTotals& c : chunks) report.regenerations += c.regenerations;
  return report;
}

}  // namespace

const char* metric_name(Metric metric) { return metric == Metric::Rd ? "rd" : "rr"; }

std::set<MethodId> default_sim_methods(Metric metric, WeightScheme scheme) {
  std::set<MethodId> methods =
      metric == Metric::Rd
          ? std::set<MethodId>{MethodId::Wald, MethodId::Ys, MethodId::Av,
                               MethodId::Ac, MethodId::Ac2}
          : std::set<MethodId>{MethodId::Asy, MethodId::Av, MethodId::Avl,
                               MethodId::Ac, MethodId::Acl, MethodId::Ac2};
  if (scheme == WeightScheme::Mh) methods.insert(MethodId::Dc);
  return methods;
}

Metric metric_from_name(const std::string& name) {
  std::string l;
  for (char c : name) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (l == "rd") return Metric::Rd;
  if (l == "rr") return Metric::Rr;
  fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "' (expected rd or rr)");
}

std::vector<double> Scenario::rates1() const {
  std::vector<double> out(rates0.size());
  for (std::size_t s = 0; s < rates0.size(); ++s) {
    out[s] = metric == Metric::Rd ? rates0[s] + effect_for(s)
                                  : rates0[s] * effect_for(s);
    require(out[s] >= 0.0 && out[s] <= 1.0, ErrorCode::InvalidArgument,
            "implied treated rate " + std::to_string(out[s]) +
                " outside [0,1] in stratum " + std::to_string(s + 1));
  }
  return out;
}

double Scenario::truth() const {
  if (effect.size() == 1) {
    return effect[0];
  }
  // Heterogeneous effects cover the MH-pooled quantity.
  std::vector<double> w(sizes.size());
  double total = 0.0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    w[s] = static_cast<double>(sizes[s].second) * sizes[s].first /
           (sizes[s].second + sizes[s].first);
    total += w[s];
  }
  const std::vector<double> p1 = rates1();
  double t1 = 0.0, t0 = 0.0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    t1 += w[s] / total * p1[s];
    t0 += w[s] / total * rates0[s];
  }
  return metric == Metric::Rd ? t1 - t0 : t1 / t0;
}

std::uint64_t substream_seed(std::uint64_t seed, long replicate_index) {
  return splitmix64(splitmix64(seed) ^
                    (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(replicate_index) + 1)));
}

std::vector<BinaryStratum> generate_dataset(const Scenario& scenario,
                                            long replicate_index,
                                            long* regenerations) {
  const std::vector<double> p1 = scenario.rates1();
  const std::size_t S = scenario.strata();
  std::mt19937_64 rng(substream_seed(scenario.seed, replicate_index));
  std::vector<BinaryStratum> data(S);

  auto draw = [&](int n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    boost::random::binomial_distribution<int> dist(n, p);
    return dist(rng);
  };

  for (long attempt = 0; attempt < kRegenerationCap; ++attempt) {
    long events0 = 0, events1 = 0;
    for (std::size_t s = 0; s < S; ++s) {
      data[s].n0 = scenario.sizes[s].first;
      data[s].n1 = scenario.sizes[s].second;
      data[s].x0 = draw(data[s].n0, scenario.rates0[s]);
      data[s].x1 = draw(data[s].n1, p1[s]);
      events0 += data[s].x0;
      events1 += data[s].x1;
    }
    const bool ok = scenario.metric == Metric::Rd ? (events0 + events1 > 0)
                                                  : (events0 > 0 && events1 > 0);
    if (ok) return data;
    if (regenerations) ++*regenerations;
  }
  fail(ErrorCode::RegenerationLimit,
       "dataset regeneration exceeded 1e6 attempts; the scenario cannot satisfy "
       "the event condition");
}

SimReport coverage_study(const Scenario& scenario, int threads) {
  return run_study(scenario, /*rejection=*/false, threads);
}

SimReport test_study(const Scenario& scenario, int threads) {
  return run_study(scenario, /*rejection=*/true, threads);
}

namespace {

std::string fmt_rate(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

Scenario base_scenario(Metric metric, WeightScheme scheme) {
  Scenario sc;
  sc.metric = metric;
  sc.scheme = scheme;
  sc.methods = default_sim_methods(metric, scheme);
  return sc;
}

void push_effect_grids(std::vector<Scenario>& out, const Scenario& proto,
                       const std::string& id_prefix, bool heterogeneous) {
  // RD effects {0, 0.3}; RR effects {1, 1.5}; heterogeneous designs use the
  // paired per-stratum values (first stratum null, the rest at the alternative).
  const bool rd = proto.metric == Metric::Rd;
  const double null_effect = rd ? 0.0 : 1.0;
  const double alt_effect = rd ? 0.3 : 1.5;
  if (!heterogeneous) {
    for (double e : {null_effect, alt_effect}) {
      Scenario sc = proto;
      sc.effect = {e};
      sc.id = id_prefix + "-" + metric_name(sc.metric) + std::to_string(e) + "-" +
              scheme_name(sc.scheme);
      out.push_back(std::move(sc));
    }
  } else {
    Scenario sc = proto;
    sc.effect.assign(sc.rates0.size(), alt_effect);
    sc.effect[0] = null_effect;
    sc.id = id_prefix + "-" + metric_name(sc.metric) + "het-" + scheme_name(sc.scheme);
    out.push_back(std::move(sc));
  }
}

std::vector<Scenario> grid_example3or4(int strata_count) {
  std::vector<Scenario> out;
  const bool three = strata_count == 3;
  const std::vector<std::vector<std::pair<int, int>>> layouts =
      three ? std::vector<std::vector<std::pair<int, int>>>{
                  {{20, 20}, {16, 16}, {12, 12}}, {{10, 30}, {8, 24}, {6, 18}}}
            : std::vector<std::vector<std::pair<int, int>>>{
                  {{24, 24}, {16, 16}}, {{12, 36}, {8, 24}}};
  const std::vector<int> ks = three ? std::vector<int>{1, 3, 5}
                                    : std::vector<int>{1, 2, 3, 4, 5};
  const std::string ex = three ? "ex4" : "ex3";
  for (std::size_t li = 0; li < layouts.size(); ++li) {
    const std::string layout = li == 0 ? "bal" : "unb";
    std::vector<std::vector<double>> rate_combos;
    if (three) {
      for (int k1 : ks)
        for (int k2 : ks)
          for (int k3 : ks)
            rate_combos.push_back({0.12 * k1, 0.12 * k2, 0.12 * k3});
    } else {
      for (int k1 : ks)
        for (int k2 : ks) rate_combos.push_back({0.12 * k1, 0.12 * k2});
    }
    for (const std::vector<double>& rates : rate_combos) {
      std::string rate_tag;
      for (double r : rates) rate_tag += "-" + fmt_rate(r);
      for (Metric metric : {Metric::Rd, Metric::Rr}) {
        const std::vector<WeightScheme> schemes =
            metric == Metric::Rd
                ? std::vector<WeightScheme>{WeightScheme::Mh, WeightScheme::Mr}
                : std::vector<WeightScheme>{WeightScheme::Mh};
        for (WeightScheme scheme : schemes) {
          Scenario proto = base_scenario(metric, scheme);
          proto.rates0 = rates;
          proto.sizes = layouts[li];
          push_effect_grids(out, proto, ex + "-" + layout + rate_tag, false);
        }
      }
    }
  }
  return out;
}

std::vector<Scenario> grid_example5() {
  std::vector<Scenario> out;
  const std::vector<std::vector<std::pair<int, int>>> layouts{
      {{24, 24}, {16, 16}}, {{12, 36}, {8, 24}}};
  for (std::size_t li = 0; li < layouts.size(); ++li) {
    const std::string layout = li == 0 ? "bal" : "unb";
    for (int scale_factor : {1, 100}) {  // n = 80 or n = 8000
      for (int k1 = 1; k1 <= 5; ++k1) {
        for (int k2 = 1; k2 <= 5; ++k2) {
          const std::vector<double> rates{0.12 * k1, 0.12 * k2};
          std::string tag = "ex5-" + layout + "-n" +
                            std::to_string(80 * scale_factor) + "-" + fmt_rate(rates[0]) +
                            "-" + fmt_rate(rates[1]);
          for (Metric metric : {Metric::Rd, Metric::Rr}) {
            const std::vector<WeightScheme> schemes =
                metric == Metric::Rd
                    ? std::vector<WeightScheme>{WeightScheme::Mh, WeightScheme::Mr}
                    : std::vector<WeightScheme>{WeightScheme::Mh};
            for (WeightScheme scheme : schemes) {
              Scenario proto = base_scenario(metric, scheme);
              proto.rates0 = rates;
              proto.sizes = layouts[li];
              for (auto& [n0, n1] : proto.sizes) {
                n0 *= scale_factor;
                n1 *= scale_factor;
              }
              push_effect_grids(out, proto, tag, true);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<Scenario> grid_example6() {
  std::vector<Scenario> out;
  for (int n : {50, 100, 200, 500, 10000}) {
    for (double rd : {0.0, 0.05}) {
      for (WeightScheme scheme :
           {WeightScheme::Mh, WeightScheme::Inv, WeightScheme::Mr}) {
        Scenario sc;
        sc.metric = Metric::Rd;
        sc.scheme = scheme;
        sc.methods = {MethodId::Wald, MethodId::Ys, MethodId::Av, MethodId::Ac,
                      MethodId::Ac2};
        sc.rates0 = {0.1, 0.6};
        sc.effect = {rd};
        sc.sizes = {{n, n}, {n, n}};
        sc.statistic = SimStatistic::Rejection;
        sc.id = "ex6-n" + std::to_string(n) + "-rd" + fmt_rate(rd) + "-" +
                scheme_name(scheme);
        out.push_back(std::move(sc));
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Scenario> scenario_grid(int example_id) {
  switch (example_id) {
    case 3: return grid_example3or4(2);
    case 4: return grid_example3or4(3);
    case 5: return grid_example5();
    case 6: return grid_example6();
    default:
      fail(ErrorCode::UnknownExample,
           "example " + std::to_string(example_id) + " is not one of 3, 4, 5, 6");
  }
}

}  // namespace moverci
