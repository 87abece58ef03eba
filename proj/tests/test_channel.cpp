#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "noisynet/channel.hpp"
#include "noisynet/errors.hpp"

using namespace noisynet;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

DerivedParams params_5000(double delta = 0.5) { return derive_params(5000, delta); }

}  // namespace

TEST_CASE("flip edge cases and rates") {
  Rng rng(1);
  CHECK(flip(1, 0.0, rng) == 1);
  CHECK(flip(0, 0.0, rng) == 0);
  CHECK_THROWS_AS(flip(0, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(flip(0, -0.01, rng), std::invalid_argument);

  const std::size_t draws = 1000000;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < draws; ++i) flips += flip(0, 0.499, rng);
  CHECK(std::abs(static_cast<double>(flips) / draws - 0.499) < 0.003);

  // Two passes through BSC(p) flip with probability 2p(1-p).
  const double p = 0.1, expect = 2 * p * (1 - p);
  const std::size_t k = 200000;
  std::size_t net = 0;
  for (std::size_t i = 0; i < k; ++i) net += flip(flip(1, p, rng), p, rng) == 0;
  const double sigma = std::sqrt(expect * (1 - expect) / k);
  CHECK(std::abs(static_cast<double>(net) / k - expect) < 4 * sigma);
}

TEST_CASE("protocol model outcomes") {
  const auto p = params_5000();
  const double r = p.radius;
  std::vector<Point> pos{{0.5, 0.5}, {0.5 + 0.5 * r, 0.5}, {0.5, 0.5 + 0.8 * r}, {0.5 - 1.2 * r, 0.5},
                         {0.5 - 1.6 * r, 0.5}};
  const NodeId listener = 0;
  const auto one = [&](std::vector<TxEvent> ev) {
    return classify_slot(ev, std::span<const NodeId>(&listener, 1), pos, p).front();
  };

  auto o = one({{0, 1, 1}});
  CHECK(o.kind == RxKind::Received);
  CHECK(o.bit == 1);
  CHECK(o.source == 1);

  CHECK(one({{0, 1, 1}, {0, 2, 0}}).kind == RxKind::Collision);
  CHECK(one({{0, 1, 1}, {0, 3, 0}}).kind == RxKind::Collision);  // 1.2 r sits inside the guard band
  CHECK(one({{0, 1, 0}, {0, 4, 1}}).kind == RxKind::Received);   // 1.6 r is clear of it
  CHECK(one({{0, 3, 1}}).kind == RxKind::Silence);                // out of range alone
  CHECK(one({}).kind == RxKind::Silence);
  CHECK(one({{0, 0, 1}}).kind == RxKind::Silence);                // own transmission
}

TEST_CASE("protocol model with zero guard band") {
  const auto p = params_5000(0.0);
  const double r = p.radius;
  std::vector<Point> pos{{0.0, 0.0}, {r, 0.0}, {-1.0001 * r, 0.0}};
  const NodeId listener = 0;
  std::vector<TxEvent> ev{{0, 1, 1}, {0, 2, 0}};
  const auto o = classify_slot(ev, std::span<const NodeId>(&listener, 1), pos, p).front();
  CHECK(o.kind == RxKind::Received);
  CHECK(o.source == 1);
}

TEST_CASE("no reception with two transmitters inside the guard radius") {
  const auto p = params_5000();
  Rng rng(3);
  const auto pos = sample_positions(400, rng);
  std::vector<NodeId> listeners;
  for (NodeId i = 0; i < 400; ++i) listeners.push_back(i);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TxEvent> ev;
    std::set<NodeId> used;
    for (int k = 0; k < 6; ++k) {
      const auto v = static_cast<NodeId>(rng.below(400));
      if (used.insert(v).second) ev.push_back({0, v, static_cast<std::uint8_t>(k & 1)});
    }
    const auto out = resolve_slot(ev, listeners, pos, p, NoiseModel::iid(0.0), rng);
    for (std::size_t li = 0; li < listeners.size(); ++li) {
      std::size_t close = 0;
      for (const auto& e : ev) {
        if (e.tx != listeners[li] && distance(pos[e.tx], pos[listeners[li]]) < p.guard_radius()) ++close;
      }
      if (close >= 2) CHECK(out[li].kind != RxKind::Received);
      if (out[li].kind == RxKind::Received) {
        const auto it = std::find_if(ev.begin(), ev.end(), [&](const TxEvent& e) { return e.tx == out[li].source; });
        REQUIRE(it != ev.end());
        CHECK(out[li].bit == it->bit);  // noiseless
      }
    }
  }
}

TEST_CASE("noise model validation and adversary cap") {
  CHECK_THROWS_AS(NoiseModel::iid(0.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseModel::iid(-0.1), std::invalid_argument);
  NoiseModel greedy;
  greedy.eps0 = 0.1;
  greedy.mode = NoiseMode::Adversarial;
  greedy.adversary = [](const FlipQuery&) { return 0.9; };
  CHECK(greedy.flip_probability(FlipQuery{}) == 0.1);
  greedy.adversary = [](const FlipQuery&) { return -1.0; };
  CHECK(greedy.flip_probability(FlipQuery{}) == 0.0);
  NoiseModel missing;
  missing.mode = NoiseMode::Adversarial;
  CHECK_THROWS_AS(missing.validate(), std::invalid_argument);
}

TEST_CASE("constant adversary matches iid noise in distribution") {
  const auto p = params_5000();
  std::vector<Point> pos{{0.5, 0.5}};
  std::vector<NodeId> listeners;
  for (int i = 0; i < 20; ++i) {
    pos.push_back({0.5 + 0.002 * i, 0.52});
    listeners.push_back(static_cast<NodeId>(i + 1));
  }
  auto sample = [&](NoiseModel model, std::uint64_t seed) {
    Rng rng(seed);
    SlotEngine engine(pos, p, std::move(model), rng);
    std::vector<double> counts;
    for (std::uint64_t s = 0; s < 2000; ++s) {
      const TxEvent e{0, 0, 1};
      const auto out = engine.transmit(s, Phase::Discovery, std::span<const TxEvent>(&e, 1), listeners);
      counts.push_back(static_cast<double>(std::count_if(out.begin(), out.end(), [](auto& o) { return o.bit == 0; })));
    }
    return counts;
  };
  const auto a = sample(NoiseModel::iid(0.2), 11);
  const auto b = sample(NoiseModel::constant_adversary(0.2), 12);
  const double crit = 1.95 * std::sqrt(2.0 / 2000.0);  // alpha = 0.001
  CHECK(ks_statistic(a, b) < crit);
  double mean = 0;
  for (double x : b) mean += x;
  CHECK(mean / b.size() == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("cell coloring") {
  const auto p = params_5000();
  const auto inst_cells = [&] {
    std::vector<Cell> cells(p.cells);
    for (std::size_t r = 0; r < p.m; ++r)
      for (std::size_t c = 0; c < p.m; ++c) {
        auto& cell = cells[cell_index(r, c, p.m)];
        cell.id = cell_index(r, c, p.m);
        cell.row = r;
        cell.col = c;
      }
    return cells;
  }();
  const auto classes = color_cells(inst_cells, p);
  CHECK(classes.size() == 81);
  CHECK(classes.size() == p.k1 + 1);
  std::set<CellId> seen;
  for (const auto& cls : classes) {
    CHECK_FALSE(cls.cells.empty());
    for (CellId a : cls.cells) {
      CHECK(seen.insert(a).second);
      for (CellId b : cls.cells) {
        if (a == b) continue;
        const auto dr = std::max(a / p.m, b / p.m) - std::min(a / p.m, b / p.m);
        const auto dc = std::max(a % p.m, b % p.m) - std::min(a % p.m, b % p.m);
        CHECK(std::max(dr, dc) >= p.reuse);
      }
    }
  }
  CHECK(seen.size() == p.cells);

  DerivedParams flat = p;
  flat.reuse = 1;
  CHECK(color_cells(inst_cells, flat).size() == 1);
}

TEST_CASE("same-class intra-cell broadcasts never collide") {
  const auto p = params_5000();
  const auto inst = place_nodes(5000, 7);
  const auto cells = assign_cells(inst, p);
  const auto classes = color_cells(cells, p);
  Rng rng(5);
  for (const auto& cls : classes) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<TxEvent> ev;
      std::vector<NodeId> listeners;
      std::vector<NodeId> expect;
      for (CellId id : cls.cells) {
        const auto& cell = cells[id];
        const NodeId tx = cell.members[rng.below(cell.size())];
        ev.push_back({0, tx, 1});
        for (NodeId v : cell.members) {
          if (v == tx) continue;
          listeners.push_back(v);
          expect.push_back(tx);
        }
      }
      const auto out = classify_slot(ev, listeners, inst.positions, p);
      for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].kind == RxKind::Received);
        CHECK(out[i].source == expect[i]);
      }
    }
  }
}

TEST_CASE("link colors") {
  const std::size_t m = 15, d = 9;
  std::set<std::size_t> around;
  const CellId mid = cell_index(7, 7, m);
  for (CellId nb : {cell_index(7, 8, m), cell_index(7, 6, m), cell_index(8, 7, m), cell_index(6, 7, m)}) {
    const auto c = link_color(mid, nb, m, d);
    CHECK(c < 4 * d * d);
    around.insert(c);
  }
  CHECK(around.size() == 4);
  CHECK(link_direction(mid, cell_index(7, 8, m), m) == LinkDirection::East);
  CHECK(link_direction(mid, cell_index(6, 7, m), m) == LinkDirection::North);
  CHECK_THROWS_AS(link_direction(mid, cell_index(5, 7, m), m), std::invalid_argument);
}

TEST_CASE("accounting identities") {
  Metrics m;
  m.energy = {1.0, 0.1};
  std::vector<TxEvent> ev{{0, 0, 1}};
  std::vector<RxOutcome> out(10, RxOutcome{RxKind::Received, 1, 0});
  account(m, StageTag::Stage1, ev, out);
  CHECK(m.em1() == doctest::Approx(2.0));
  CHECK(m.em2() == doctest::Approx(1.0));
  CHECK(m.tx_count() == 1);
  CHECK(m.rx_count() == 10);

  const Metrics before = m;
  account(m, StageTag::Stage2, std::span<const TxEvent>{}, std::span<const RxOutcome>{});
  CHECK(m.tx_count() == before.tx_count());
  CHECK(m.rx_count() == before.rx_count());
  CHECK(m.em1() == before.em1());

  // Silence is not a reception.
  std::vector<RxOutcome> mixed{{RxKind::Silence, 0, kNoNode}, {RxKind::Collision, 0, 3}};
  account(m, StageTag::Stage1, ev, mixed);
  CHECK(m.rx_count() == 11);
  CHECK(m.energy_identities_hold());
}

TEST_CASE("slot engine keeps energy identities after every slot") {
  const auto p = params_5000();
  Rng placement(9);
  const auto pos = sample_positions(300, placement);
  Rng rng(10);
  SlotEngine engine(pos, p, NoiseModel::iid(0.1), rng, EnergyConfig{1.3, 0.7});
  engine.enable_trace();
  std::vector<NodeId> all(300);
  for (NodeId i = 0; i < 300; ++i) all[i] = i;
  for (std::uint64_t s = 0; s < 200; ++s) {
    std::vector<TxEvent> ev{{0, static_cast<NodeId>(rng.below(300)), 1}};
    engine.transmit(s, s % 2 ? Phase::Discovery : Phase::InterCell, ev, all);
    if (s % 17 == 0) engine.charge(Phase::InterCell, 5, 5);
  }
  for (const auto& rec : engine.trace().records) {
    CHECK(rec.cum_em2 == doctest::Approx(1.3 * rec.cum_tx));
    CHECK(rec.cum_em1 == doctest::Approx(1.3 * rec.cum_tx + 0.7 * rec.cum_rx));
  }
  CHECK(engine.metrics().energy_identities_hold());
  CHECK(engine.trace().records.size() == 200);
}
