#include "noisynet/line_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "noisynet/errors.hpp"

namespace noisynet {

std::size_t LineProtocol::active_link_rounds() const {
  std::size_t count = 0;
  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t i = 0; i < links(); ++i) count += active(i, t) ? 1 : 0;
  }
  return count;
}

std::vector<std::uint64_t> run_noiseless(const LineProtocol& p) {
  std::vector<std::uint64_t> state = p.initial;
  std::vector<std::uint8_t> sent(p.links());
  for (std::size_t t = 0; t < p.rounds; ++t) {
    for (std::size_t i = 0; i < p.links(); ++i) sent[i] = p.active(i, t) ? p.emit(i, t, state[i]) : 0;
    for (std::size_t i = 0; i < p.links(); ++i) {
      if (p.active(i, t)) state[i + 1] = p.absorb(i + 1, t, state[i + 1], sent[i]);
    }
  }
  return state;
}

std::string_view mode_name(SimMode mode) {
  switch (mode) {
    case SimMode::Repetition: return "repetition";
    case SimMode::TreeCode: return "treecode";
    case SimMode::Abstract: return "abstract";
  }
  return "?";
}

SimMode parse_mode(std::string_view name) {
  if (name == "repetition") return SimMode::Repetition;
  if (name == "treecode") return SimMode::TreeCode;
  if (name == "abstract") return SimMode::Abstract;
  throw std::invalid_argument("unknown simulation mode '" + std::string(name) + "'");
}

Obs BscTransport::send(std::size_t, bool, std::uint64_t, std::uint8_t bit) {
  ++uses_;
  return to_obs(flip(bit, eps_, rng_));
}

std::size_t treecode_depth(const LineProtocol& protocol, const SimConfig& config) {
  return std::max(protocol.rounds, config.d_max);
}

namespace {

void check_shape(const LineProtocol& p) {
  if (p.initial.size() != p.length) throw std::invalid_argument("line protocol: initial state size mismatch");
  if (p.length > 1 && (!p.active || !p.emit || !p.absorb)) {
    throw std::invalid_argument("line protocol: missing callbacks");
  }
}

LineResult run_repetition(const LineProtocol& p, const SimConfig& cfg, LinkTransport& transport) {
  if (cfg.r3 == 0 || cfg.r3 % 2 == 0) throw std::invalid_argument("repetition mode: r3 must be odd");
  LineResult res;
  std::vector<std::uint64_t> state = p.initial;
  std::vector<std::uint8_t> sent(p.links());
  std::vector<Obs> obs(cfg.r3);
  std::uint64_t slot = 0;
  for (std::size_t t = 0; t < p.rounds; ++t) {
    bool any = false;
    for (std::size_t i = 0; i < p.links(); ++i) {
      if (!p.active(i, t)) continue;
      any = true;
      sent[i] = p.emit(i, t, state[i]);
    }
    if (!any) continue;
    for (std::size_t i = 0; i < p.links(); ++i) {
      if (!p.active(i, t)) continue;
      for (std::size_t k = 0; k < cfg.r3; ++k) obs[k] = transport.send(i, false, slot + k, sent[i]);
      res.transmissions += cfg.r3;
      ++res.link_bits;
      state[i + 1] = p.absorb(i + 1, t, state[i + 1], majority_or(obs, 0));
    }
    slot += cfg.r3;
  }
  res.logical_slots = slot;
  res.outputs = std::move(state);
  return res;
}

LineResult run_abstract(const LineProtocol& p, const SimConfig& cfg, Rng& rng) {
  LineResult res;
  res.outputs = run_noiseless(p);
  res.link_bits = p.active_link_rounds();
  const auto rounds = static_cast<double>(std::max(p.rounds, cfg.stage_rounds));
  res.logical_slots = static_cast<std::uint64_t>(std::ceil(cfg.k_rs * rounds));
  res.transmissions = static_cast<std::uint64_t>(p.links()) * cfg.r3;
  if (cfg.eps0 > 0.0 && p.length > 1) {
    const double fail = std::exp(-cfg.gamma * rounds);
    if (rng.uniform() < fail) {
      res.corrupted = true;
      if (cfg.corrupt) res.outputs.back() = cfg.corrupt(rng);
    }
  }
  return res;
}

// Each link's sender tree-encodes the history of bits it has emitted; the
// receiver re-decodes the whole history every round and replays its own
// transitions from the decoded path. A tail of dummy rounds pads the code to
// its full depth so the final decode protects the last real bits.
LineResult run_treecode(const LineProtocol& p, const SimConfig& cfg, LinkTransport& transport) {
  if (!cfg.tree_code) throw std::invalid_argument("treecode mode: no tree code configured");
  const TreeCode& code = *cfg.tree_code;
  if (p.rounds > cfg.d_max) {
    throw CapacityError("treecode mode: " + std::to_string(p.rounds) + " noiseless rounds exceed the decode cap of " +
                        std::to_string(cfg.d_max));
  }
  const std::size_t total = treecode_depth(p, cfg);
  if (total > code.depth()) throw std::invalid_argument("treecode mode: tree code is shallower than the simulation");
  const std::size_t b = code.bits_per_symbol();
  const std::size_t links = p.links();

  LineResult res;
  res.link_bits = p.active_link_rounds();
  std::vector<std::uint64_t> state = p.initial;
  std::vector<std::uint64_t> sent_prefix(links, 0);    // bits emitted so far, LSB = round 0
  std::vector<std::vector<Symbol>> received(links);    // at the receiver of each link
  std::vector<std::uint8_t> sent(links);
  std::uint64_t slot = 0;

  for (std::size_t t = 0; t < total; ++t) {
    for (std::size_t i = 0; i < links; ++i) {
      const bool live = t < p.rounds && p.active(i, t);
      sent[i] = live ? p.emit(i, t, state[i]) : 0;
      sent_prefix[i] |= std::uint64_t{sent[i]} << t;
    }
    for (std::size_t i = 0; i < links; ++i) {
      const Symbol sym = code.label(t, sent_prefix[i]);
      Symbol got = 0;
      bool erased = false;
      for (std::size_t k = 0; k < b; ++k) {
        const auto bit = static_cast<std::uint8_t>((sym >> k) & 1U);
        const Obs o = transport.send(i, false, slot + k, bit);
        transport.send(i, true, slot + k, 0);
        if (o == Obs::Erased) erased = true;
        else if (o == Obs::One) got = static_cast<Symbol>(got | (1U << k));
      }
      res.transmissions += 2 * b;
      received[i].push_back(erased ? kErasedSymbol : got);

      const auto path = code.decode(received[i], cfg.d_max, DecodeMetric::Bit);
      std::uint64_t s = p.initial[i + 1];
      for (std::size_t r = 0; r <= t && r < p.rounds; ++r) {
        if (p.active(i, r)) s = p.absorb(i + 1, r, s, path[r]);
      }
      state[i + 1] = s;
    }
    slot += b;
  }
  res.logical_slots = slot;
  res.outputs = std::move(state);
  return res;
}

}  // namespace

LineResult simulate_line(const LineProtocol& protocol, const SimConfig& config, LinkTransport& transport, Rng& rng) {
  check_shape(protocol);
  switch (config.mode) {
    case SimMode::Repetition: return run_repetition(protocol, config, transport);
    case SimMode::TreeCode: return run_treecode(protocol, config, transport);
    case SimMode::Abstract: return run_abstract(protocol, config, rng);
  }
  throw std::logic_error("simulate_line: unknown mode");
}

// --- protocols ---------------------------------------------------------------

LineProtocol or_line_protocol(std::span<const std::uint8_t> values) {
  LineProtocol p;
  p.length = values.size();
  p.rounds = p.links();
  p.initial.assign(values.begin(), values.end());
  p.active = [](std::size_t link, std::size_t round) { return link == round; };
  p.emit = [](std::size_t, std::size_t, std::uint64_t s) { return static_cast<std::uint8_t>(s & 1U); };
  p.absorb = [](std::size_t, std::size_t, std::uint64_t s, std::uint8_t bit) { return (s | bit) & 1U; };
  return p;
}

AdderStep serial_add_step(std::uint8_t carry, std::uint8_t child_bit, std::uint8_t own_bit) {
  const unsigned sum = unsigned{carry} + child_bit + own_bit;
  return {static_cast<std::uint8_t>(sum & 1U), static_cast<std::uint8_t>(sum >> 1)};
}

// State layout: [0, g) own value, [g, 2g) accumulated output, bit 2g carry.
std::uint64_t sum_state_value(std::uint64_t state, std::size_t g) {
  return (state >> g) & ((std::uint64_t{1} << g) - 1);
}

LineProtocol sum_line_protocol(std::span<const std::uint64_t> values, std::size_t g) {
  if (g == 0 || g > 24) throw std::invalid_argument("sum protocol: g must lie in [1, 24]");
  const std::uint64_t mask = (std::uint64_t{1} << g) - 1;
  LineProtocol p;
  p.length = values.size();
  p.rounds = p.length < 2 ? 0 : p.links() + g - 1;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] > mask) {
      throw std::invalid_argument("sum protocol: value " + std::to_string(values[k]) + " does not fit in " +
                                  std::to_string(g) + " bits");
    }
    // Position 0 has nothing to add, so its output stream is its own value.
    p.initial.push_back(values[k] | ((k == 0 ? values[k] : 0) << g));
  }
  p.active = [g](std::size_t link, std::size_t round) { return round >= link && round < link + g; };
  p.emit = [g](std::size_t pos, std::size_t round, std::uint64_t s) {
    return static_cast<std::uint8_t>((s >> (g + (round - pos))) & 1U);
  };
  p.absorb = [g](std::size_t pos, std::size_t round, std::uint64_t s, std::uint8_t bit) {
    const std::size_t j = round - (pos - 1);
    const auto own = static_cast<std::uint8_t>((s >> j) & 1U);
    const auto carry = static_cast<std::uint8_t>((s >> (2 * g)) & 1U);
    const AdderStep step = serial_add_step(carry, bit, own);
    std::uint64_t next = s & ~(std::uint64_t{1} << (2 * g));
    next |= std::uint64_t{step.out} << (g + j);
    next |= std::uint64_t{step.carry} << (2 * g);
    return next;
  };
  return p;
}

}  // namespace noisynet
