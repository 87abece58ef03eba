#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "noisynet/errors.hpp"
#include "noisynet/harness.hpp"

namespace noisynet {

using nlohmann::json;

namespace {

std::string_view noise_name(NoiseMode m) { return m == NoiseMode::Iid ? "iid" : "adversarial"; }

NoiseMode parse_noise(std::string_view s) {
  if (s == "iid") return NoiseMode::Iid;
  if (s == "adversarial") return NoiseMode::Adversarial;
  throw ConfigError("noise: unknown model '" + std::string(s) + "' (expected iid or adversarial)");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["protocol"] = protocol_name(c.protocol);
  j["n"] = c.n_values;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["eps0"] = c.eps0;
  j["delta"] = c.delta;
  j["mode"] = mode_name(c.mode);
  j["noise"] = noise_name(c.noise);
  if (c.bits.kind == BitSource::Kind::Explicit) {
    j["bits"] = c.bits.list;
  } else {
    j["bits"] = c.bits.name();
  }
  j["eps1"] = c.eps1;
  j["c-rep"] = c.c_rep;
  j["r2-factor"] = c.r2_factor;
  j["l1-factor"] = c.l1_factor;
  j["r3-factor"] = c.r3_factor;
  j["gamma"] = c.gamma;
  j["k-rs"] = c.k_rs;
  j["d-max"] = c.d_max;
  j["l-sub-factor"] = c.l_sub_factor;
  j["treecode-alphabet"] = c.treecode_alphabet;
  j["treecode-seed"] = c.treecode_seed;
  j["code-seed"] = c.code_seed;
  j["code-search"] = c.code_search;
  j["e-t"] = c.energy.e_t;
  j["e-r"] = c.energy.e_r;
  j["distribute"] = c.distribute;
  j["max-resamples"] = c.max_resamples;
  j["threads"] = c.threads;
  return j;
}

json metrics_json(const Metrics& m) {
  static constexpr const char* kNames[] = {"stage1", "stage2", "distribution"};
  json j;
  json stages = json::object();
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const auto& c = m.stages[s];
    stages[kNames[s]] = {{"slots", c.slots}, {"tx", c.tx}, {"rx", c.rx}, {"em1", c.em1}, {"em2", c.em2}};
  }
  j["stages"] = std::move(stages);
  j["slots_total"] = m.slots_total();
  j["tx"] = m.tx_count();
  j["rx"] = m.rx_count();
  j["em1"] = m.em1();
  j["em2"] = m.em2();
  return j;
}

json aggregate_json(const Aggregate& a) {
  return {{"n", a.n},
          {"trials", a.trials},
          {"errors", a.errors},
          {"error_rate", a.error_rate},
          {"error_ci", {a.error_ci.lo, a.error_ci.hi}},
          {"stage1_errors", a.stage1_errors},
          {"resamples", a.resamples},
          {"mean_slots_total", a.mean_slots_total},
          {"mean_slots_stage1", a.mean_slots_stage1},
          {"mean_slots_stage2", a.mean_slots_stage2},
          {"mean_slots_distribution", a.mean_slots_distribution},
          {"mean_tx_total", a.mean_tx_total},
          {"mean_tx_stage1", a.mean_tx_stage1},
          {"mean_tx_stage2", a.mean_tx_stage2},
          {"mean_rx_total", a.mean_rx_total},
          {"mean_em1", a.mean_em1},
          {"mean_em2", a.mean_em2},
          {"mean_em1_stage1", a.mean_em1_stage1},
          {"max_slots_total", a.max_slots_total},
          {"max_tx_total", a.max_tx_total}};
}

template <typename T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

std::size_t get_count(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(std::string(key) + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

double get_real(const json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return v.get<double>();
}

}  // namespace

std::string config_json(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "protocol") c.protocol = parse_protocol(get_as<std::string>(v, k));
    else if (key == "n") {
      c.n_values.clear();
      if (v.is_array()) {
        for (const auto& x : v) c.n_values.push_back(get_count(x, k));
      } else {
        c.n_values.push_back(get_count(v, k));
      }
    } else if (key == "trials") c.trials = get_count(v, k);
    else if (key == "seed") c.seed = get_count(v, k);
    else if (key == "eps0") c.eps0 = get_real(v, k);
    else if (key == "delta") c.delta = get_real(v, k);
    else if (key == "mode") {
      try {
        c.mode = parse_mode(get_as<std::string>(v, k));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mode: ") + e.what());
      }
    } else if (key == "noise") c.noise = parse_noise(get_as<std::string>(v, k));
    else if (key == "bits") {
      if (v.is_array()) {
        c.bits.kind = BitSource::Kind::Explicit;
        c.bits.list.clear();
        for (const auto& x : v) {
          const auto b = get_count(x, k);
          if (b > 1) throw ConfigError("bits: explicit list entries must be 0 or 1");
          c.bits.list.push_back(static_cast<std::uint8_t>(b));
        }
      } else {
        c.bits = BitSource::parse(get_as<std::string>(v, k));
      }
    } else if (key == "eps1") c.eps1 = get_real(v, k);
    else if (key == "c-rep") c.c_rep = get_count(v, k);
    else if (key == "r2-factor") c.r2_factor = get_real(v, k);
    else if (key == "l1-factor") c.l1_factor = get_count(v, k);
    else if (key == "r3-factor") c.r3_factor = get_real(v, k);
    else if (key == "gamma") c.gamma = get_real(v, k);
    else if (key == "k-rs") c.k_rs = get_real(v, k);
    else if (key == "d-max") c.d_max = get_count(v, k);
    else if (key == "l-sub-factor") c.l_sub_factor = get_real(v, k);
    else if (key == "treecode-alphabet") c.treecode_alphabet = get_count(v, k);
    else if (key == "treecode-seed") c.treecode_seed = get_count(v, k);
    else if (key == "code-seed") c.code_seed = get_count(v, k);
    else if (key == "code-search") c.code_search = get_count(v, k);
    else if (key == "e-t") c.energy.e_t = get_real(v, k);
    else if (key == "e-r") c.energy.e_r = get_real(v, k);
    else if (key == "distribute") c.distribute = get_as<bool>(v, k);
    else if (key == "max-resamples") c.max_resamples = get_count(v, k);
    else if (key == "threads") c.threads = get_count(v, k);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  return c;
}

std::string report_json(const RunReport& report, bool include_trials) {
  json j;
  j["schema"] = 1;
  j["config"] = config_to_json(report.config);
  if (include_trials) {
    json rows = json::array();
    for (const auto& t : report.trials) {
      rows.push_back({{"n", t.n},
                      {"trial", t.trial},
                      {"seed", t.seed},
                      {"resamples", t.resamples},
                      {"value", t.value},
                      {"oracle", t.oracle},
                      {"correct", t.correct},
                      {"stage1_error", t.stage1_error},
                      {"corruptions", t.corruptions},
                      {"wrong_nodes", t.wrong_nodes},
                      {"metrics", metrics_json(t.metrics)}});
    }
    j["trials"] = std::move(rows);
  }
  json aggs = json::array();
  for (const auto& a : report.aggregates) aggs.push_back(aggregate_json(a));
  j["aggregates"] = std::move(aggs);
  if (!report.sweep.empty()) {
    json rows = json::array();
    for (const auto& r : report.sweep) {
      rows.push_back({{"n", r.agg.n},
                      {"tx_per_n", r.tx_per_n},
                      {"slots_norm", r.slots_norm},
                      {"slots_stage2_norm", r.slots_stage2_norm},
                      {"slots_stage2_rep_norm", r.slots_stage2_rep_norm},
                      {"em1_stage1_norm", r.em1_stage1_norm},
                      {"tx_stage2_per_n", r.tx_stage2_per_n}});
    }
    j["sweep"] = std::move(rows);
  }
  if (report.bands) {
    const auto& b = *report.bands;
    j["band_ratios"] = {{"tx_per_n", b.tx_per_n},
                        {"slots_norm", b.slots_norm},
                        {"slots_stage2_norm", b.slots_stage2_norm},
                        {"slots_stage2_rep_norm", b.slots_stage2_rep_norm},
                        {"em1_stage1_norm", b.em1_stage1_norm},
                        {"tx_stage2_per_n", b.tx_stage2_per_n}};
  }
  return j.dump(2);
}

std::string sweep_csv(const RunReport& report) {
  std::ostringstream out;
  out << "n,trials,error_rate,tx_total,tx_per_n,slots_total,slots_norm,em1,em2,resamples\n";
  out << std::setprecision(10);
  std::vector<SweepRow> rows = report.sweep;
  if (rows.empty()) {
    for (const auto& a : report.aggregates) rows.push_back(sweep_row(a));
  }
  for (const auto& r : rows) {
    const auto& a = r.agg;
    out << a.n << ',' << a.trials << ',' << a.error_rate << ',' << a.mean_tx_total << ',' << r.tx_per_n << ','
        << a.mean_slots_total << ',' << r.slots_norm << ',' << a.mean_em1 << ',' << a.mean_em2 << ',' << a.resamples
        << '\n';
  }
  return out.str();
}

}  // namespace noisynet
