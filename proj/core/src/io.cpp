#include "moverci/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace moverci {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long parse_long(const std::string& s, const std::string& name, int line_no) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    require(pos == s.size(), ErrorCode::ParseError, "");
    return v;
  } catch (...) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + name +
                                    " '" + s + "' is not an integer");
  }
}

double parse_double(const std::string& s, const std::string& name, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    require(pos == s.size(), ErrorCode::ParseError, "");
    return v;
  } catch (...) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + name +
                                    " '" + s + "' is not a number");
  }
}

std::string full(double x) {
  if (x == kInfinity) return "inf";
  if (x == -kInfinity) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed3(double x) {
  if (x == kInfinity) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

json number_or_inf(double x) {
  if (x == kInfinity) return json("inf");
  if (x == -kInfinity) return json("-inf");
  return json(x);
}

double number_from(const json& j, const std::string& name) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    fail(ErrorCode::ParseError, name + ": unexpected string '" + s + "'");
  }
  require(j.is_number(), ErrorCode::ParseError, name + " must be a number");
  return j.get<double>();
}

}  // namespace

// ---- CSV ingestion -----------------------------------------------------------

std::vector<BinaryStratum> parse_binary_csv_text(const std::string& text,
                                                 const std::string& name) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::vector<std::string> order;
  std::map<std::string, std::array<std::pair<long, long>, 2>> cells;  // (events,total)
  std::map<std::string, std::array<bool, 2>> present;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (!header_seen) {
      require(f.size() == 4 && lower(f[0]) == "stratum" && lower(f[1]) == "group" &&
                  lower(f[2]) == "events" && lower(f[3]) == "total",
              ErrorCode::ParseError,
              name + " line " + std::to_string(line_no) +
                  ": expected header 'stratum,group,events,total'");
      header_seen = true;
      continue;
    }
    require(f.size() == 4, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": expected 4 fields, got " +
                std::to_string(f.size()));
    const std::string stratum = f[0];
    const long group = parse_long(f[1], "group", line_no);
    require(group == 0 || group == 1, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": group must be 0 or 1");
    const long events = parse_long(f[2], "events", line_no);
    const long total = parse_long(f[3], "total", line_no);
    require(events >= 0 && total >= 1 && events <= total, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) +
                ": need 0 <= events <= total and total >= 1");
    if (!cells.count(stratum)) {
      order.push_back(stratum);
      present[stratum] = {false, false};
    }
    require(!present[stratum][group], ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": duplicate cell for stratum '" +
                stratum + "' group " + std::to_string(group));
    cells[stratum][group] = {events, total};
    present[stratum][group] = true;
  }
  require(header_seen, ErrorCode::ParseError, name + ": empty file");
  require(!order.empty(), ErrorCode::ParseError, name + ": no data rows");

  std::vector<BinaryStratum> out;
  for (const std::string& id : order) {
    require(present[id][0] && present[id][1], ErrorCode::MissingCell,
            "stratum '" + id + "' lacks group " + (present[id][0] ? "1" : "0"));
    BinaryStratum b;
    b.x0 = static_cast<int>(cells[id][0].first);
    b.n0 = static_cast<int>(cells[id][0].second);
    b.x1 = static_cast<int>(cells[id][1].first);
    b.n1 = static_cast<int>(cells[id][1].second);
    out.push_back(b);
  }
  return out;
}

std::vector<BinaryStratum> parse_binary_csv(const std::string& path) {
  return parse_binary_csv_text(read_file(path), path);
}

std::vector<SurvivalRecord> parse_survival_csv_text(const std::string& text,
                                                    const std::string& name) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::vector<SurvivalRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (!header_seen) {
      require(f.size() == 4 && lower(f[0]) == "time" && lower(f[1]) == "event" &&
                  lower(f[2]) == "group" && lower(f[3]) == "stratum",
              ErrorCode::ParseError,
              name + " line " + std::to_string(line_no) +
                  ": expected header 'time,event,group,stratum'");
      header_seen = true;
      continue;
    }
    require(f.size() == 4, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": expected 4 fields");
    SurvivalRecord r;
    r.time = parse_double(f[0], "time", line_no);
    require(r.time >= 0.0, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": negative time");
    const long ev = parse_long(f[1], "event", line_no);
    require(ev == 0 || ev == 1, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": event must be 0 or 1");
    r.event = ev == 1;
    const long g = parse_long(f[2], "group", line_no);
    require(g == 0 || g == 1, ErrorCode::ParseError,
            name + " line " + std::to_string(line_no) + ": group must be 0 or 1");
    r.group = static_cast<int>(g);
    r.stratum = static_cast<int>(parse_long(f[3], "stratum", line_no));
    out.push_back(r);
  }
  require(header_seen, ErrorCode::ParseError, name + ": empty file");
  require(!out.empty(), ErrorCode::ParseError, name + ": no data rows");
  return out;
}

std::vector<SurvivalRecord> parse_survival_csv(const std::string& path) {
  return parse_survival_csv_text(read_file(path), path);
}

// ---- JSON ingestion ----------------------------------------------------------

ExternalCis parse_external_cis_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("external CI JSON: ") + e.what());
  }
  require(j.is_array(), ErrorCode::ParseError,
          "external CI JSON must be an array of {stratum, group, estimate, lower, "
          "upper, level, variance?, n?}");
  std::vector<long> order;
  std::map<long, std::array<std::optional<ExternalCi>, 2>> cells;
  for (const json& e : j) {
    require(e.is_object(), ErrorCode::ParseError, "external CI entries must be objects");
    for (const char* key : {"stratum", "group", "estimate", "lower", "upper", "level"})
      require(e.contains(key), ErrorCode::ParseError,
              std::string("external CI entry missing '") + key + "'");
    const long stratum = e.at("stratum").get<long>();
    const long group = e.at("group").get<long>();
    require(group == 0 || group == 1, ErrorCode::ParseError, "group must be 0 or 1");
    ExternalCi ci;
    ci.estimate = number_from(e.at("estimate"), "estimate");
    ci.lower = number_from(e.at("lower"), "lower");
    ci.upper = number_from(e.at("upper"), "upper");
    ci.level = number_from(e.at("level"), "level");
    if (e.contains("variance") && !e.at("variance").is_null())
      ci.variance = number_from(e.at("variance"), "variance");
    if (e.contains("n") && !e.at("n").is_null()) ci.n = e.at("n").get<int>();
    if (!cells.count(stratum)) order.push_back(stratum);
    require(!cells[stratum][group].has_value(), ErrorCode::ParseError,
            "duplicate external CI for stratum " + std::to_string(stratum) +
                " group " + std::to_string(group));
    cells[stratum][group] = ci;
  }
  require(!order.empty(), ErrorCode::ParseError, "external CI JSON: no entries");
  ExternalCis out;
  for (long id : order) {
    require(cells[id][0] && cells[id][1], ErrorCode::MissingCell,
            "external CIs for stratum " + std::to_string(id) + " lack one group");
    out.cells.push_back({*cells[id][0], *cells[id][1]});
  }
  return out;
}

ExternalCis parse_external_cis_json(const std::string& path) {
  return parse_external_cis_json_text(read_file(path));
}

namespace {

Scenario scenario_from_json(const json& j, int index) {
  require(j.is_object(), ErrorCode::ParseError, "scenario must be a JSON object");
  Scenario sc;
  sc.id = j.value("id", "scenario-" + std::to_string(index + 1));
  require(j.contains("rates0") && j.at("rates0").is_array(), ErrorCode::ParseError,
          sc.id + ": 'rates0' array is required");
  for (const json& r : j.at("rates0")) sc.rates0.push_back(number_from(r, "rates0"));
  require(j.contains("sizes") && j.at("sizes").is_array(), ErrorCode::ParseError,
          sc.id + ": 'sizes' array of [n0, n1] pairs is required");
  for (const json& p : j.at("sizes")) {
    require(p.is_array() && p.size() == 2, ErrorCode::ParseError,
            sc.id + ": each size entry must be [n0, n1]");
    sc.sizes.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  }
  sc.metric = metric_from_name(j.value("metric", "rd"));
  if (j.contains("effect")) {
    const json& e = j.at("effect");
    if (e.is_array()) {
      sc.effect.clear();
      for (const json& v : e) sc.effect.push_back(number_from(v, "effect"));
    } else {
      sc.effect = {number_from(e, "effect")};
    }
  }
  sc.scheme = scheme_from_name(j.value("scheme", "mh"));
  if (j.contains("methods")) {
    sc.methods.clear();
    for (const json& m : j.at("methods"))
      sc.methods.insert(method_from_name(m.get<std::string>()));
  } else {
    sc.methods = default_sim_methods(sc.metric, sc.scheme);
  }
  sc.level = j.value("level", 0.95);
  sc.replicates = j.value("replicates", 100000L);
  sc.seed = j.value("seed", 0ULL);
  const std::string policy = lower(j.value("policy", "half-event"));
  if (policy == "none")
    sc.policy = ZeroCellPolicy::None;
  else if (policy == "half-event" || policy == "halfevent")
    sc.policy = ZeroCellPolicy::HalfEvent;
  else
    fail(ErrorCode::ParseError, sc.id + ": unknown zero-cell policy '" + policy + "'");
  const std::string stat = lower(j.value("statistic", "coverage"));
  if (stat == "coverage")
    sc.statistic = SimStatistic::Coverage;
  else if (stat == "rejection")
    sc.statistic = SimStatistic::Rejection;
  else
    fail(ErrorCode::ParseError, sc.id + ": unknown statistic '" + stat + "'");
  if (j.contains("target") && !j.at("target").is_null())
    sc.target = number_from(j.at("target"), "target");
  return sc;
}

}  // namespace

std::vector<Scenario> parse_scenarios_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scenario JSON: ") + e.what());
  }
  std::vector<Scenario> out;
  if (j.is_array()) {
    int i = 0;
    for (const json& e : j) out.push_back(scenario_from_json(e, i++));
  } else {
    out.push_back(scenario_from_json(j, 0));
  }
  require(!out.empty(), ErrorCode::ParseError, "scenario JSON: no scenarios");
  return out;
}

std::vector<Scenario> parse_scenarios_json(const std::string& path) {
  return parse_scenarios_json_text(read_file(path));
}

// ---- emission ----------------------------------------------------------------

namespace {

json result_to_json(const EffectResult& r) {
  json j;
  j["method"] = method_name(r.method);
  j["scale"] = scale_name(r.scale);
  j["estimate"] = number_or_inf(r.estimate);
  j["lower"] = number_or_inf(r.ci.lower);
  j["upper"] = number_or_inf(r.ci.upper);
  j["level"] = r.ci.level;
  j["scheme"] = scheme_name(r.weights.scheme);
  j["weights"] = r.weights.resolved;
  if (r.gamma0) j["gamma0"] = *r.gamma0;
  if (r.gamma1) j["gamma1"] = *r.gamma1;
  j["corrections"] = r.corrections;
  return j;
}

EffectResult result_from_json(const json& j) {
  EffectResult r;
  r.method = method_from_name(j.at("method").get<std::string>());
  const std::string scale = j.at("scale").get<std::string>();
  r.scale = scale == "ratio" ? Scale::Ratio : Scale::Difference;
  r.estimate = number_from(j.at("estimate"), "estimate");
  r.ci.lower = number_from(j.at("lower"), "lower");
  r.ci.upper = number_from(j.at("upper"), "upper");
  r.ci.level = j.at("level").get<double>();
  r.weights.scheme = scheme_from_name(j.at("scheme").get<std::string>());
  r.weights.resolved = j.at("weights").get<std::vector<double>>();
  if (j.contains("gamma0")) r.gamma0 = j.at("gamma0").get<double>();
  if (j.contains("gamma1")) r.gamma1 = j.at("gamma1").get<double>();
  if (j.contains("corrections"))
    r.corrections = j.at("corrections").get<std::vector<std::string>>();
  return r;
}

}  // namespace

std::string effect_results_to_json(const std::vector<EffectResult>& results,
                                   const std::vector<MethodFailure>& failures) {
  json j;
  j["results"] = json::array();
  for (const EffectResult& r : results) j["results"].push_back(result_to_json(r));
  j["failures"] = json::array();
  for (const MethodFailure& f : failures) {
    json e;
    e["method"] = method_name(f.method);
    e["scale"] = scale_name(f.scale);
    e["code"] = error_code_name(f.code);
    e["message"] = f.message;
    j["failures"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::vector<EffectResult> effect_results_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("results JSON: ") + e.what());
  }
  const json& arr = j.is_array() ? j : j.at("results");
  std::vector<EffectResult> out;
  for (const json& e : arr) out.push_back(result_from_json(e));
  return out;
}

std::string effect_results_to_csv(const std::vector<EffectResult>& results) {
  std::ostringstream os;
  os << "method,scale,estimate,lower,upper,level,scheme,gamma0,gamma1,corrections\n";
  for (const EffectResult& r : results) {
    std::string notes;
    for (std::size_t i = 0; i < r.corrections.size(); ++i) {
      std::string c = r.corrections[i];
      std::replace(c.begin(), c.end(), ',', ';');
      notes += (i ? "|" : "") + c;
    }
    os << method_name(r.method) << ',' << scale_name(r.scale) << ','
       << full(r.estimate) << ',' << full(r.ci.lower) << ',' << full(r.ci.upper)
       << ',' << full(r.ci.level) << ',' << scheme_name(r.weights.scheme) << ','
       << (r.gamma0 ? full(*r.gamma0) : "") << ','
       << (r.gamma1 ? full(*r.gamma1) : "") << ',' << notes << '\n';
  }
  return os.str();
}

namespace {

int method_rank(MethodId m) {
  switch (m) {  // Asymptotic comparators first, MOVER family after.
    case MethodId::Dc: return 0;
    case MethodId::Wald: return 1;
    case MethodId::Asy: return 1;
    case MethodId::Av: return 2;
    case MethodId::Ys: return 3;
    case MethodId::Avl: return 3;
    case MethodId::Ac: return 4;
    case MethodId::Ac2: return 5;
    case MethodId::Acl: return 6;
  }
  return 9;
}

}  // namespace

std::string effect_results_to_table(const std::vector<EffectResult>& results,
                                    const std::vector<MethodFailure>& failures) {
  std::ostringstream os;
  for (Scale scale : {Scale::Difference, Scale::Ratio}) {
    std::vector<const EffectResult*> rows;
    for (const EffectResult& r : results)
      if (r.scale == scale) rows.push_back(&r);
    if (rows.empty()) continue;
    std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) {
      return method_rank(a->method) < method_rank(b->method);
    });
    const char* title = scale == Scale::Difference ? "Difference" : "Ratio";
    char level_pct[24];
    std::snprintf(level_pct, sizeof level_pct, "%g", rows.front()->ci.level * 100.0);
    os << title << " (" << scheme_name(rows.front()->weights.scheme) << " weights, "
       << level_pct << "% CI)\n";
    os << "  method  estimate   interval\n";
    for (const EffectResult* r : rows) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-7s %8s   [%s, %s]\n",
                    method_name(r->method), fixed3(r->estimate).c_str(),
                    fixed3(r->ci.lower).c_str(), fixed3(r->ci.upper).c_str());
      os << line;
    }
    for (const EffectResult* r : rows)
      for (const std::string& c : r->corrections)
        os << "  note (" << method_name(r->method) << "): " << c << '\n';
    os << '\n';
  }
  for (const MethodFailure& f : failures)
    os << "failed: " << method_name(f.method) << " (" << scale_name(f.scale)
       << "): " << f.message << '\n';
  return os.str();
}

std::string sim_reports_to_csv(const std::vector<SimReport>& reports) {
  std::ostringstream os;
  os << "scenario_id,method,metric,rate,mcse,replicates,excluded\n";
  for (const SimReport& rep : reports) {
    for (const MethodReport& m : rep.methods) {
      os << rep.scenario_id << ',' << method_name(m.method) << ','
         << metric_name(rep.metric) << ',' << full(m.rate) << ',' << full(m.mcse)
         << ',' << m.used << ',' << m.excluded << '\n';
    }
  }
  return os.str();
}

std::string sim_reports_to_table(const std::vector<SimReport>& reports) {
  std::ostringstream os;
  for (const SimReport& rep : reports) {
    os << rep.scenario_id << "  (" << rep.statistic << ", metric "
       << metric_name(rep.metric) << ", scheme " << scheme_name(rep.scheme)
       << ", target " << fixed3(rep.target) << ", replicates " << rep.replicates
       << ", regenerations " << rep.regenerations << ")\n";
    os << "  method    rate      3*mcse    used      excluded\n";
    for (const MethodReport& m : rep.methods) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-8s  %.4f    %.4f    %-8ld  %ld\n",
                    method_name(m.method), m.rate, 3.0 * m.mcse, m.used, m.excluded);
      os << line;
    }
    os << '\n';
  }
  return os.str();
}

// ---- orchestration -----------------------------------------------------------

namespace {

void emit(const RunConfig& config, const std::string& text, std::ostream& out) {
  if (config.output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(config.output_path, std::ios::binary);
  require(f.good(), ErrorCode::ParseError,
          "cannot write '" + config.output_path + "'");
  f << text;
}

int run_analyze_binary(const RunConfig& config, std::ostream& out) {
  require(!config.input_path.empty(), ErrorCode::InvalidArgument,
          "analyze-binary needs --input");
  const std::vector<BinaryStratum> data = parse_binary_csv(config.input_path);
  std::set<MethodId> methods = config.methods;
  if (methods.empty())
    for (Scale sc : config.scales)
      for (MethodId m : methods_for_scale(sc)) methods.insert(m);
  const BinaryAnalysis analysis =
      analyze_binary(data, config.scheme, methods, config.scales, config.level,
                     config.policy, config.fixed_weights);
  switch (config.format) {
    case OutputFormat::Table:
      emit(config, effect_results_to_table(analysis.results, analysis.failures), out);
      break;
    case OutputFormat::Csv:
      emit(config, effect_results_to_csv(analysis.results), out);
      break;
    case OutputFormat::Json:
      emit(config, effect_results_to_json(analysis.results, analysis.failures), out);
      break;
  }
  return analysis.failures.empty() ? 0 : 3;
}

int run_analyze_survival(const RunConfig& config, std::ostream& out) {
  require(!config.input_path.empty() || !config.external_ci_path.empty(),
          ErrorCode::InvalidArgument,
          "analyze-survival needs --input records and/or --external-ci");
  require(config.timepoint > 0.0, ErrorCode::InvalidArgument,
          "analyze-survival needs --milestone <t> or --horizon <L>");
  std::vector<SurvivalRecord> records;
  if (!config.input_path.empty()) records = parse_survival_csv(config.input_path);
  std::optional<ExternalCis> external;
  if (!config.external_ci_path.empty())
    external = parse_external_cis_json(config.external_ci_path);

  const SurvivalSummaries summaries = make_summaries(
      records, config.measure, config.timepoint, config.level, external);
  const WeightSpec weights =
      config.scheme == WeightScheme::Fixed
          ? resolve_weights_survival(summaries.summaries, WeightScheme::Fixed,
                                     config.fixed_weights)
          : resolve_weights_survival(summaries.summaries, config.scheme);

  std::set<MethodId> methods = config.methods;
  if (methods.empty()) {
    methods = {MethodId::Av, MethodId::Ac, MethodId::Ac2, MethodId::Wald,
               MethodId::Avl, MethodId::Acl};
  }
  const SurvivalAnalysis analysis =
      analyze_survival(summaries, weights, methods, config.scales, config.level);
  std::string text;
  switch (config.format) {
    case OutputFormat::Table: {
      text = effect_results_to_table(analysis.results, analysis.failures);
      for (const std::string& n : analysis.notes) text += "note: " + n + '\n';
      break;
    }
    case OutputFormat::Csv:
      text = effect_results_to_csv(analysis.results);
      break;
    case OutputFormat::Json: {
      text = effect_results_to_json(analysis.results, analysis.failures);
      break;
    }
  }
  emit(config, text, out);
  return analysis.failures.empty() ? 0 : 3;
}

int run_simulate(const RunConfig& config, std::ostream& out) {
  std::vector<Scenario> scenarios;
  if (config.example != 0) {
    scenarios = scenario_grid(config.example);
  } else {
    require(!config.scenario_path.empty(), ErrorCode::InvalidArgument,
            "simulate needs --example <3|4|5|6> or --scenario <file.json>");
    scenarios = parse_scenarios_json(config.scenario_path);
  }
  const bool from_grid = config.example != 0;
  std::vector<SimReport> reports;
  bool any_dead_method = false;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    Scenario sc = scenarios[i];
    if (from_grid || config.replicates_set) sc.replicates = config.replicates;
    if (from_grid || config.seed_set) sc.seed = config.seed + i;
    const SimReport rep = sc.statistic == SimStatistic::Rejection
                              ? test_study(sc, config.threads)
                              : coverage_study(sc, config.threads);
    for (const MethodReport& m : rep.methods)
      if (m.used == 0) any_dead_method = true;
    reports.push_back(rep);
  }
  if (config.format == OutputFormat::Table)
    emit(config, sim_reports_to_table(reports), out);
  else
    emit(config, sim_reports_to_csv(reports), out);
  return any_dead_method ? 3 : 0;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case RunConfig::Command::AnalyzeBinary: return run_analyze_binary(config, out);
      case RunConfig::Command::AnalyzeSurvival: return run_analyze_survival(config, out);
      case RunConfig::Command::Simulate: return run_simulate(config, out);
    }
    err << "error: unknown command\n";
    return 2;
  } catch (const MoverError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace moverci
