#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "noisynet/errors.hpp"
#include "noisynet/harness.hpp"

using namespace noisynet;

namespace {

ExperimentConfig small(Protocol p, std::size_t n = 500) {
  ExperimentConfig c;
  c.protocol = p;
  c.n_values = {n};
  c.trials = 20;
  c.eps0 = 0.0;
  c.bits = BitSource::parse("bernoulli(0.3)");
  return c;
}

}  // namespace

TEST_CASE("oracle") {
  NetworkInstance inst;
  inst.n = 5;
  inst.bits = {0, 1, 0, 1, 1};
  CHECK(oracle(inst, Protocol::Max) == 1);
  CHECK(oracle(inst, Protocol::Hist) == 3);
  inst.bits.assign(5, 0);
  CHECK(oracle(inst, Protocol::Max) == 0);
  CHECK(oracle(inst, Protocol::Hist) == 0);

  Rng rng(1);
  auto big = place_nodes(1000, 4);
  BitSource::parse("bernoulli(0.5)").fill(big, rng);
  const double ones = static_cast<double>(oracle(big, Protocol::Hist));
  CHECK(std::abs(ones - 500) <= 3 * std::sqrt(250.0));
}

TEST_CASE("bit sources") {
  Rng rng(2);
  auto inst = place_nodes(100, 1);
  BitSource::parse("all-one").fill(inst, rng);
  CHECK(oracle(inst, Protocol::Hist) == 100);
  BitSource::parse("all-zero").fill(inst, rng);
  CHECK(oracle(inst, Protocol::Hist) == 0);
  BitSource::parse("single-one").fill(inst, rng);
  CHECK(oracle(inst, Protocol::Hist) == 1);
  BitSource list;
  list.kind = BitSource::Kind::Explicit;
  list.list = {1, 0, 0};
  list.fill(inst, rng);
  CHECK(oracle(inst, Protocol::Hist) == 34);
  CHECK(BitSource::parse("bernoulli(0.25)").name() == "bernoulli(0.25)");
  CHECK_THROWS_AS(BitSource::parse("bernoulli(1.5)"), ConfigError);
  CHECK_THROWS_AS(BitSource::parse("sometimes"), ConfigError);
}

TEST_CASE("noiseless experiments are exact") {
  for (Protocol p : {Protocol::Max, Protocol::Hist}) {
    const auto r = run_experiment(small(p));
    REQUIRE(r.aggregates.size() == 1);
    CHECK(r.aggregates[0].errors == 0);
    CHECK(r.aggregates[0].trials == 20);
    for (const auto& t : r.trials) {
      CHECK(t.correct);
      CHECK(!t.stage1_error);
      CHECK(t.metrics.energy_identities_hold());
    }
  }
}

TEST_CASE("reports do not depend on the thread count") {
  auto c = small(Protocol::Max);
  c.eps0 = 0.1;
  c.trials = 8;
  c.threads = 1;
  const auto a = nlohmann::json::parse(report_json(run_experiment(c)));
  c.threads = 4;
  const auto b = nlohmann::json::parse(report_json(run_experiment(c)));
  CHECK(a["trials"] == b["trials"]);
  CHECK(a["aggregates"] == b["aggregates"]);
  CHECK(trial_seed(1, 500, 0) != trial_seed(1, 500, 1));
  CHECK(trial_seed(1, 500, 0) != trial_seed(1, 1000, 0));
  CHECK(trial_seed(1, 500, 0) == trial_seed(1, 500, 0));
}

TEST_CASE("distribution reaches every node") {
  auto c = small(Protocol::Hist);
  c.distribute = true;
  c.trials = 3;
  const auto r = run_experiment(c);
  for (const auto& t : r.trials) CHECK(t.wrong_nodes == 0);
}

TEST_CASE("wilson interval") {
  const auto a = wilson_interval(5, 100);
  const auto b = wilson_interval(50, 1000);
  CHECK(a.lo < 0.05);
  CHECK(a.hi > 0.05);
  CHECK(b.hi - b.lo < a.hi - a.lo);
  const auto z = wilson_interval(0, 400);
  CHECK(z.lo == doctest::Approx(0.0));
  CHECK(z.hi == doctest::Approx(1.96 * 1.96 / (400 + 1.96 * 1.96)).epsilon(1e-9));
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto edit) {
    ExperimentConfig x;
    edit(x);
    CHECK_THROWS_AS(x.validate(), ConfigError);
  };
  bad([](ExperimentConfig& x) { x.eps0 = 0.5; });
  bad([](ExperimentConfig& x) { x.eps0 = -0.1; });
  bad([](ExperimentConfig& x) { x.trials = 0; });
  bad([](ExperimentConfig& x) { x.n_values = {8}; });
  bad([](ExperimentConfig& x) { x.c_rep = 8; });
  bad([](ExperimentConfig& x) { x.treecode_alphabet = 12; });
  bad([](ExperimentConfig& x) { x.d_max = 30; });
  bad([](ExperimentConfig& x) { x.eps0 = 0.3; });  // majority of 9 cannot reach eps1
  bad([](ExperimentConfig& x) { x.n_values.clear(); });
}

TEST_CASE("config json round trip") {
  ExperimentConfig c;
  c.protocol = Protocol::Hist;
  c.n_values = {1000, 4000};
  c.mode = SimMode::Repetition;
  c.bits = BitSource::parse("bernoulli(0.2)");
  c.eps0 = 0.07;
  c.distribute = true;
  const auto text = config_json(c);
  const auto back = config_from_json(text);
  CHECK(config_json(back) == text);
  CHECK(back.n_values == c.n_values);
  CHECK(back.mode == SimMode::Repetition);

  const auto single = config_from_json(R"({"n": 700, "trials": 3, "c-rep": 11})");
  CHECK(single.n_values == std::vector<std::size_t>{700});
  CHECK(single.c_rep == 11);
  CHECK_THROWS_AS(config_from_json(R"({"n_values": [100]})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"trials": "ten"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"mode": "fast"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json("[1,2"), ConfigError);
}

TEST_CASE("report json and csv") {
  auto c = small(Protocol::Max);
  c.trials = 2;
  const auto r = run_experiment(c);
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["schema"] == 1);
  CHECK(j["trials"].size() == 2);
  CHECK(j["config"]["n"][0] == 500);
  const auto csv = sweep_csv(r);
  CHECK(csv.substr(0, csv.find('\n')) == "n,trials,error_rate,tx_total,tx_per_n,slots_total,slots_norm,em1,em2,resamples");
  std::istringstream lines(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("sweep needs a spread of sizes") {
  auto c = small(Protocol::Max);
  c.n_values = {500, 1000};
  CHECK_THROWS_AS(sweep(c), ConfigError);
  c.n_values = {500, 1000, 2000};
  CHECK_THROWS_AS(sweep(c), ConfigError);
  c.n_values = {250, 500, 2000};
  c.trials = 2;
  const auto r = sweep(c);
  CHECK(r.sweep.size() == 3);
  REQUIRE(r.bands);
  CHECK(r.bands->tx_per_n >= 1.0);
}

TEST_CASE("sweep normalizations") {
  Aggregate a;
  a.n = 1000;
  a.mean_tx_total = 3000;
  a.mean_slots_total = 2000;
  a.mean_slots_stage2 = 500;
  a.mean_em1_stage1 = 1000 * std::log(1000.0);
  const auto row = sweep_row(a);
  const double s = std::sqrt(1000 / std::log(1000.0));
  CHECK(row.tx_per_n == doctest::Approx(3.0));
  CHECK(row.slots_norm == doctest::Approx(2000 / s));
  CHECK(row.slots_stage2_norm == doctest::Approx(500 / s));
  CHECK(row.slots_stage2_rep_norm == doctest::Approx(500 / std::sqrt(1000 * std::log(1000.0))));
  CHECK(row.em1_stage1_norm == doctest::Approx(1.0));
  SweepRow b = row;
  b.tx_per_n = 6.0;
  const auto bands = band_ratios({row, b});
  CHECK(bands.tx_per_n == doctest::Approx(2.0));
  CHECK(bands.slots_norm == doctest::Approx(1.0));
}

TEST_CASE("validate run passes on a clean configuration") {
  for (Protocol p : {Protocol::Max, Protocol::Hist}) {
    // several cells per color class, so some cells sit idle in a slot
    auto c = small(p, 5000);
    c.eps0 = 0.1;
    c.trials = 1;
    const auto a = validate_run(c);
    for (const auto& f : a.failures) MESSAGE(f);
    CHECK(a.ok());
    CHECK(a.slots_checked > 0);
    if (p == Protocol::Max) CHECK(a.confirmation_exempt > 0);
  }
}

TEST_CASE("collision check flags a mis-colored slot") {
  const auto params = derive_params(5000, 0.5);
  const double r = params.radius;
  // two cells' transmissions share slot 42 while their receivers sit close
  std::vector<Point> pos{{0.1, 0.1}, {0.1 + 0.5 * r, 0.1}, {0.1 + 1.2 * r, 0.1}, {0.1 + 1.6 * r, 0.1}};
  Trace t;
  TraceRecord a;
  a.slot = 42;
  a.phase = Phase::InterCell;
  a.events = {{42, 0, 1}};
  a.listeners = {1};
  TraceRecord b = a;
  b.events = {{42, 3, 0}};
  b.listeners = {2};
  t.records = {a, b};
  AuditReport rep;
  check_collisions(t, pos, params, rep);
  CHECK(!rep.collisions_ok);
  REQUIRE(!rep.failures.empty());
  CHECK(rep.failures.front().find("slot 42") != std::string::npos);

  // the same pair in different slots is fine
  t.records[1].slot = 43;
  t.records[1].events[0].slot = 43;
  AuditReport ok;
  check_collisions(t, pos, params, ok);
  CHECK(ok.collisions_ok);

  // confirmation slots may collide
  for (auto& rec : t.records) {
    rec.phase = Phase::Confirmation;
    rec.slot = 42;
    rec.events[0].slot = 42;
  }
  AuditReport conf;
  check_collisions(t, pos, params, conf);
  CHECK(conf.collisions_ok);
  CHECK(conf.confirmation_exempt == 2);
}

TEST_CASE("oblivious check compares transmitter sets") {
  Trace a;
  TraceRecord rec;
  rec.slot = 5;
  rec.phase = Phase::Discovery;
  rec.events = {{5, 7, 1}};
  a.records = {rec};
  Trace b = a;
  b.records[0].events[0].bit = 0;
  AuditReport same;
  check_oblivious(a, b, same);
  CHECK(same.oblivious_ok);
  b.records[0].events[0].tx = 8;
  AuditReport diff;
  check_oblivious(a, b, diff);
  CHECK(!diff.oblivious_ok);
}

TEST_CASE("tree-code mode fails fast when arrays are too long") {
  ExperimentConfig c = small(Protocol::Hist, 5000);
  c.mode = SimMode::TreeCode;
  CHECK_THROWS_AS(make_context(c, 5000), InfeasibleError);
  c.n_values = {200};
  c.protocol = Protocol::Max;
  CHECK_NOTHROW(make_context(c, 200));
}
