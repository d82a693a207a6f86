#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "partaa/analysis.hpp"
#include "partaa/assembler.hpp"
#include "partaa/noc.hpp"
#include "partaa/scenarios.hpp"
#include "partaa/system.hpp"

namespace partaa {

/// Worker count for sweeps: PARTAA_THREADS, default 1.
inline unsigned sweep_threads() {
  const char* env = std::getenv("PARTAA_THREADS");
  if (env == nullptr) return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n < 1 ? 1u : static_cast<unsigned>(std::min<long>(n, 256));
}

/// Runs fn(i) for i in [0, n). Each index writes only its own result slot,
/// so the merged output does not depend on the thread count.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------- busy loops

/// Smallest block busy_block() can build.
inline Cycles busy_block_min(bool jump) noexcept { return jump ? 5 : 4; }

/// Assembly for a straight-line block whose standalone cost is exactly
/// `cost` cycles. It ends in HALT, or in `JMPR` to `next` when given.
/// Uses r1..r5 and reads r0 as zero. Labels are prefixed with `tag`.
inline std::string busy_block(Cycles cost, const std::string& tag, const std::string& next = {}) {
  const bool jump = !next.empty();
  if (cost < busy_block_min(jump)) throw AnalysisError("busy block needs at least " + std::to_string(busy_block_min(jump)) + " cycles");
  std::string s;
  const std::string end = jump ? "        JMPR r5\n" : "        HALT\n";
  const Cycles prologue = jump ? 5 : 4;
  if (cost < prologue + 8) {
    if (jump) s += "        LOADK r5, " + next + "\n";
    for (Cycles i = 0; i < cost - busy_block_min(jump); ++i) s += "        NOP\n";
    return s + end;
  }
  // prologue + 9 per iteration + 4 for the exit branch + padding + 4
  const Cycles n = (cost - prologue - 8) / 9;
  const Cycles pad = (cost - prologue - 8) % 9;
  s += "        LOADK r1, " + std::to_string(n) + "\n";
  s += "        LOADK r2, 1\n";
  s += "        LOADK r3, " + tag + "_loop\n";
  s += "        LOADK r4, " + tag + "_exit\n";
  if (jump) s += "        LOADK r5, " + next + "\n";
  s += tag + "_loop:\n";
  s += "        BEQ r1, r0, r4\n";
  s += "        SUB r1, r1, r2\n";
  s += "        JMPR r3\n";
  s += tag + "_exit:\n";
  for (Cycles i = 0; i < pad; ++i) s += "        NOP\n";
  return s + end;
}

inline std::string nop_padding(Cycles n) {
  std::string s;
  for (Cycles i = 0; i < n; ++i) s += "        NOP\n";
  return s;
}

/// Static cost of an image along its executed path, measured by running it
/// alone with a partition that is always active.
inline Cycles standalone_cost(const BinaryImage& image, Cycles limit = 1'000'000);

inline SystemConfig single_processor_config(PartitionSchedule schedule, Cycles delta_so = 4) {
  SystemConfig cfg;
  cfg.delta_so = delta_so;
  cfg.processors.push_back({std::move(schedule), {}});
  cfg.noc.channels.clear();
  cfg.noc.slot_table = {{-1}, 8};
  return cfg;
}

/// Steps until partition `part` of processor `proc` halts; returns the cycle
/// on which its HALT retired.
inline std::optional<Cycles> run_until_halt(System& sys, unsigned proc, unsigned part, Cycles limit) {
  while (sys.cycle() < limit) {
    sys.step();
    const auto& ctx = sys.processor(proc).context(part);
    if (ctx.halted) {
      if (ctx.faulted) return std::nullopt;
      return sys.cycle() - 1;
    }
  }
  return std::nullopt;
}

inline Cycles standalone_cost(const BinaryImage& image, Cycles limit) {
  SystemConfig cfg = single_processor_config(PartitionSchedule::always(1), 0);
  cfg.processors[0].images[0] = image;
  System sys(cfg, false);
  auto halt = run_until_halt(sys, 1, 1, limit);
  return halt ? *halt + 1 : std::numeric_limits<Cycles>::max();
}

// ------------------------------------------------------- partitioned WCET

struct WcetTrial {
  Cycles task = 0, budget = 0, period = 0, window_start = 0;
  Cycles standalone = 0;
  Cycles expected = 0;
  Cycles simulated = 0;

  bool ok() const noexcept { return standalone == task && simulated == expected; }
};

struct WcetReport {
  std::uint64_t seed = 0;
  std::vector<WcetTrial> trials;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return !t.ok(); }));
  }
  bool ok() const { return failures() == 0; }
};

/// One busy-loop task of cost `task` released at the start of a window of
/// `budget` cycles repeating every `period`.
inline WcetTrial run_wcet_trial(Cycles task, Cycles budget, Cycles period, Cycles window_start) {
  WcetTrial t{task, budget, period, window_start};
  const BinaryImage image = assemble(busy_block(task, "w"));
  t.standalone = standalone_cost(image);
  t.expected = partitioned_wcet(task, budget, period);
  SystemConfig cfg = single_processor_config({period, 0, {{1, window_start, budget}}, 0});
  cfg.processors[0].images[0] = image;
  // The task must not run before its release: start the clock at the window.
  cfg.processors[0].schedule.phase = window_start;
  System sys(cfg, false);
  auto halt = run_until_halt(sys, 1, 1, t.expected + 2 * period + 16);
  t.simulated = halt ? *halt + 1 : std::numeric_limits<Cycles>::max();
  return t;
}

inline WcetReport verify_wcet(std::uint64_t seed, std::size_t count, unsigned threads, Cycles max_period = 256) {
  WcetReport report{seed, std::vector<WcetTrial>(count)};
  std::mt19937_64 rng(seed);
  struct Draw {
    Cycles task, budget, period, start;
  };
  std::vector<Draw> draws(count);
  for (auto& d : draws) {
    d.period = std::uniform_int_distribution<Cycles>(1, max_period)(rng);
    d.budget = std::uniform_int_distribution<Cycles>(1, d.period)(rng);
    d.task = std::uniform_int_distribution<Cycles>(4, std::max<Cycles>(4, 10 * d.period))(rng);
    d.start = std::uniform_int_distribution<Cycles>(0, d.period - d.budget)(rng);
  }
  parallel_for(count, threads, [&](std::size_t i) {
    const Draw& d = draws[i];
    report.trials[i] = run_wcet_trial(d.task, d.budget, d.period, d.start);
  });
  return report;
}

// ------------------------------------------------------------ cases 1 and 2

struct CaseTrial {
  std::string inputs;
  Cycles expected = 0;
  Cycles simulated = 0;

  bool ok() const noexcept { return expected == simulated; }
};

/// Case 1: a then b back to back in one partition window.
inline CaseTrial run_case1(Cycles wcet_a, Cycles wcet_b, Cycles budget, Cycles period) {
  CaseTrial t;
  t.inputs = "a=" + std::to_string(wcet_a) + " b=" + std::to_string(wcet_b) + " budget=" + std::to_string(budget) +
             " period=" + std::to_string(period);
  const Cycles tasks[] = {wcet_a, wcet_b};
  t.expected = wcet_case1(tasks, budget);
  const std::string src = busy_block(wcet_a, "a", "task_b") + "task_b:\n" + busy_block(wcet_b, "b");
  SystemConfig cfg = single_processor_config({period, 0, {{1, 0, budget}}, 0});
  cfg.processors[0].images[0] = assemble(src);
  System sys(cfg, false);
  auto halt = run_until_halt(sys, 1, 1, 4 * period + wcet_a + wcet_b);
  t.simulated = halt ? *halt + 1 : std::numeric_limits<Cycles>::max();
  return t;
}

/// Case 2: a released gamma_a into partition 1's window, b released gamma_b
/// into partition 2's window, which follows after the switch overhead.
inline CaseTrial run_case2(Cycles budget1, Cycles gamma_a, Cycles budget2, Cycles gamma_b, Cycles wcet_b,
                           Cycles switch_overhead) {
  CaseTrial t;
  t.inputs = "tp1=" + std::to_string(budget1) + " ga=" + std::to_string(gamma_a) + " tp2=" + std::to_string(budget2) +
             " gb=" + std::to_string(gamma_b) + " b=" + std::to_string(wcet_b) + " so=" + std::to_string(switch_overhead);
  const Cycles start2 = budget1 + switch_overhead;
  PartitionSchedule s{start2 + budget2 + switch_overhead, 0, {{1, 0, budget1}, {2, start2, budget2}}, switch_overhead};
  t.expected = wcet_case2(s, 1, 2, gamma_a, gamma_b, wcet_b);

  SystemConfig cfg = single_processor_config(s, switch_overhead);
  // a occupies the rest of its window and never completes within it.
  cfg.processors[0].images[0] = assemble(nop_padding(gamma_a) + "        LOADK r3, spin\nspin:   JMPR r3\n");
  cfg.processors[0].images[1] = assemble(nop_padding(gamma_b) + busy_block(wcet_b, "b"));
  System sys(cfg, false);
  auto halt = run_until_halt(sys, 1, 2, 4 * s.period);
  t.simulated = halt ? *halt + 1 - gamma_a : std::numeric_limits<Cycles>::max();
  return t;
}

struct CaseReport {
  std::vector<CaseTrial> case1, case2;

  std::size_t failures() const {
    auto bad = [](const auto& v) { return std::count_if(v.begin(), v.end(), [](const auto& t) { return !t.ok(); }); };
    return static_cast<std::size_t>(bad(case1) + bad(case2));
  }
  bool ok() const { return failures() == 0; }
};

inline CaseReport verify_cases(std::uint64_t seed, std::size_t count, unsigned threads) {
  std::mt19937_64 rng(seed ^ 0x5EEDCA5Eull);
  auto pick = [&](Cycles lo, Cycles hi) { return std::uniform_int_distribution<Cycles>(lo, hi)(rng); };
  struct Draw1 {
    Cycles a, b, budget, period;
  };
  struct Draw2 {
    Cycles tp1, ga, tp2, gb, b, so;
  };
  std::vector<Draw1> d1(count);
  std::vector<Draw2> d2(count);
  for (std::size_t i = 0; i < count; ++i) {
    d1[i].a = pick(busy_block_min(true), 300);
    d1[i].b = pick(busy_block_min(false), 300);
    d1[i].budget = d1[i].a + d1[i].b + pick(0, 100);
    d1[i].period = d1[i].budget + pick(0, 100);
    d2[i].tp1 = pick(1, 200);
    d2[i].ga = pick(0, d2[i].tp1);
    d2[i].tp2 = pick(busy_block_min(false), 200);
    d2[i].b = pick(busy_block_min(false), d2[i].tp2);
    d2[i].gb = pick(0, d2[i].tp2 - d2[i].b);
    d2[i].so = pick(0, 8);
  }
  CaseReport r{std::vector<CaseTrial>(count), std::vector<CaseTrial>(count)};
  parallel_for(count, threads, [&](std::size_t i) {
    r.case1[i] = run_case1(d1[i].a, d1[i].b, d1[i].budget, d1[i].period);
    r.case2[i] = run_case2(d2[i].tp1, d2[i].ga, d2[i].tp2, d2[i].gb, d2[i].b, d2[i].so);
  });
  return r;
}

// ------------------------------------------------------------------- case 3

struct Case3Report {
  Cycles wcet_a = 0, wcet_b = 0;
  ConsumerBudgets budgets;
  Cycles formula = 0;
  Cycles max_response = 0;
  Cycles worst_phase = 0;
  Cycles phases = 0;
  std::size_t incomplete = 0;

  bool ok() const noexcept { return incomplete == 0 && max_response <= formula; }
  bool tight() const noexcept { return max_response == formula; }
};

inline constexpr Cycles kCase3WorkA = 60;
inline constexpr Cycles kCase3WorkB = 40;

/// alpha on processor 1 does kCase3WorkA cycles of work, sends one packet
/// and halts. beta on processor 2 polls its reception counter, then does
/// kCase3WorkB cycles of work and halts. Processor 2's schedule phase is
/// swept over its whole period; the response is measured from alpha's
/// release to beta's completion.
inline SystemConfig case3_config(Cycles phase) {
  SystemConfig cfg = default_config();
  cfg.processors.resize(2);
  cfg.processors[0].schedule = {354, 0, {{1, 0, 150}, {2, 154, 96}, {3, 254, 96}}, 4};
  cfg.processors[1].schedule = {354, phase, {{1, 0, 150}, {2, 154, 96}, {3, 254, 96}}, 4};
  const AddressMap& m = cfg.map;
  const std::string alpha = busy_block(kCase3WorkA - 6, "a", "send") +
                            "send:   LOADK r6, " + std::to_string(m.tx_base()) + "\n" +
                            "        ST.P r6, r2\n"
                            "        HALT\n";
  const std::string beta = "        LOADK r6, " + std::to_string(m.rx_count_base()) + "\n"
                           "        LOADK r7, poll\n"
                           "        LOADK r8, work\n"
                           "poll:   LD.P r9, r6\n"
                           "        BEQ r9, r0, r7\n"
                           "        JMPR r8\n"
                           "work:\n" + busy_block(kCase3WorkB, "b");
  cfg.processors[0].images[0] = assemble(alpha, {m});
  cfg.processors[1].images[0] = assemble(beta, {m});
  return cfg;
}

inline Case3Report verify_case3(unsigned threads) {
  Case3Report r;
  const SystemConfig probe = case3_config(0);
  r.wcet_a = partitioned_wcet(kCase3WorkA, budgets_of(probe.processors[0].schedule).p1, probe.processors[0].schedule.period);
  r.wcet_b = kCase3WorkB;
  r.budgets = budgets_of(probe.processors[1].schedule);
  r.formula = wcet_case3(r.wcet_a, r.wcet_b, std::nullopt, r.budgets, false);
  r.phases = probe.processors[1].schedule.period;

  std::vector<std::optional<Cycles>> response(r.phases);
  parallel_for(r.phases, threads, [&](std::size_t phase) {
    System sys(case3_config(phase), false);
    auto halt = run_until_halt(sys, 2, 1, 20 * r.formula);
    if (halt) response[phase] = *halt + 1;
  });
  for (std::size_t p = 0; p < response.size(); ++p) {
    if (!response[p]) {
      ++r.incomplete;
      continue;
    }
    if (*response[p] > r.max_response) {
      r.max_response = *response[p];
      r.worst_phase = p;
    }
  }
  return r;
}

// ---------------------------------------------------------------------- NoC

struct ChannelMeasurement {
  std::uint32_t channel = 0;
  std::uint32_t s_total = 0, s_channel = 0;
  Cycles t_slot = 0;
  Cycles bound_hub = 0;
  Cycles worst_hub = 0;
  Cycles worst_e2e = 0;
  Cycles worst_phase = 0;
  bool delivered_all = true;

  Cycles bound_e2e() const noexcept { return bound_hub + 2 * kEdgeLatency; }
  bool sound() const noexcept { return delivered_all && worst_hub <= bound_hub && worst_e2e <= bound_e2e(); }
  bool tight() const noexcept { return sound() && worst_hub == bound_hub && worst_e2e == bound_e2e(); }
};

// A transmit buffer accepts a new packet at most every other cycle.
inline constexpr Cycles kTxSpacing = 2;

/// Injects one packet on `channel` at every phase of the slot table while all
/// other channels are kept saturated, and records the worst hub latency and
/// end-to-end delay of that packet.
inline ChannelMeasurement measure_channel(const NocConfig& cfg, std::uint32_t channel, bool broken_arbitration) {
  ChannelMeasurement m;
  m.channel = channel;
  m.s_total = cfg.slot_table.size();
  m.s_channel = cfg.slot_table.owned_by(channel);
  m.t_slot = cfg.slot_table.t_slot;
  m.bound_hub = channel_latency(m.s_total, m.s_channel, m.t_slot);

  const ChannelConfig* test = nullptr;
  for (const auto& c : cfg.channels) {
    if (c.id == channel) test = &c;
  }
  if (test == nullptr) throw AnalysisError("no channel " + std::to_string(channel));
  std::vector<const ChannelConfig*> load;
  for (const auto& c : cfg.channels) {
    if (c.id != channel && c.src_ni != test->src_ni) load.push_back(&c);
  }

  const Cycles round = Cycles{m.s_total} * m.t_slot;
  const Cycles warmup = 4 * round + 32;
  // Saturating senders refill every kTxSpacing cycles, so the joint state of
  // load and slot table repeats with the least common multiple of both.
  const Cycles sweep = std::lcm(round, kTxSpacing);
  for (Cycles phase = 0; phase < sweep; ++phase) {
    Noc noc(cfg);
    noc.hub().set_broken_arbitration(broken_arbitration);
    Trace trace(false);
    const Cycles inject = warmup + phase;
    const Cycles deadline = inject + 4 * (m.bound_e2e() + round);
    std::optional<std::uint64_t> seq;
    std::optional<Delivery> got;
    for (Cycles c = 0; c < deadline && !got; ++c) {
      for (const auto* l : load) {
        if (noc.tx_free(l->src_ni) && noc.in_flight(l->id) < 64) noc.ni_send(l->src_ni, l->id, 0, c, trace);
      }
      if (c == inject) {
        if (noc.ni_send(test->src_ni, test->id, 0xC0FFEE, c, trace)) seq = trace.events().back().a;
      }
      noc.step(c, trace);
      if (seq) {
        for (const auto& d : noc.deliveries()) {
          if (d.seq == *seq) got = d;
        }
      }
    }
    if (!got) {
      m.delivered_all = false;
      m.worst_phase = phase;
      continue;
    }
    if (got->hub_latency() > m.worst_hub || (got->hub_latency() == m.worst_hub && got->end_to_end() > m.worst_e2e)) {
      m.worst_hub = got->hub_latency();
      m.worst_phase = phase;
    }
    m.worst_e2e = std::max(m.worst_e2e, got->end_to_end());
  }
  return m;
}

/// The channel under test owns `s_channel` evenly spread slots; every other
/// slot is owned by its own saturating competitor channel.
inline NocConfig sweep_noc_config(std::uint32_t s_total, std::uint32_t s_channel, Cycles t_slot) {
  NocConfig cfg;
  cfg.routers = 4;
  cfg.nis_per_router = 3;
  cfg.channels.push_back({0, 0, 3, s_channel, 0});
  const unsigned sources[] = {1, 2, 4, 5, 6, 7, 8, 9, 10, 11};
  for (std::uint32_t k = 0; k < s_total - s_channel; ++k) {
    cfg.channels.push_back({k + 1, sources[k], sources[(k + 1) % 10], 1, 0});
  }
  cfg.slot_table = SlotTable::spread(s_total, cfg.channels, t_slot);
  return cfg;
}

inline std::vector<ChannelMeasurement> verify_noc_sweep(bool broken_arbitration, unsigned threads,
                                                        std::uint32_t max_slots = 8) {
  struct Cell {
    std::uint32_t s, sc;
    Cycles t;
  };
  std::vector<Cell> cells;
  for (std::uint32_t s = 1; s <= max_slots; ++s) {
    for (std::uint32_t sc = 1; sc <= s; ++sc) {
      for (Cycles t : {Cycles{1}, Cycles{4}, Cycles{8}}) cells.push_back({s, sc, t});
    }
  }
  std::vector<ChannelMeasurement> out(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    out[i] = measure_channel(sweep_noc_config(cells[i].s, cells[i].sc, cells[i].t), 0, broken_arbitration);
  });
  return out;
}

inline std::vector<ChannelMeasurement> verify_noc_config(const NocConfig& cfg, bool broken_arbitration,
                                                         unsigned threads) {
  std::vector<ChannelMeasurement> out(cfg.channels.size());
  parallel_for(cfg.channels.size(), threads,
               [&](std::size_t i) { out[i] = measure_channel(cfg, cfg.channels[i].id, broken_arbitration); });
  return out;
}


// ----------------------------------------------------------------- isolation

/// Well-behaved partition: counts, stores to its own segment, calls through
/// the hardware stack and publishes the counter in its flag, forever.
inline std::string isolation_victim_source() {
  return ".data\n"
         ".word ONE 1\n"
         ".word SLOT 600\n"
         ".text\n"
         "      LOADK r1, ONE\n"
         "      LOADK r3, loop\n"
         "      LOADK r4, fn\n"
         "      LOADK r6, SLOT\n"
         "loop: ADD r2, r2, r1\n"
         "      ST.P r6, r2\n"
         "      LD.P r5, r6\n"
         "      CALL r4\n"
         "      ST.P r0, r2\n"
         "      JMPR r3\n"
         "fn:   ADD r7, r6, r1\n"
         "      MUL r8, r2, r5\n"
         "      ST.P r7, r8\n"
         "      RET\n";
}

/// Random program: arbitrary constants, ALU work, shared and protected
/// loads and stores, jumps, calls and returns, with some words replaced by
/// random (mostly invalid) bit patterns.
inline BinaryImage random_program(std::mt19937_64& rng, std::size_t length, const AddressMap& map) {
  static const char* alu[] = {"ADD", "SUB", "MUL", "AND", "OR", "XOR", "SLL", "SRL", "SLT"};
  static const char* mem[] = {"LD.S", "LD.P", "ST.S", "ST.P"};
  static const char* ctl[] = {"BEQ", "BLT", "JMPR", "CALL", "RET", "HALT"};
  auto reg = [&] { return "r" + std::to_string(rng() % kRegisterCount); };
  std::string src;
  for (std::size_t i = 0; i < length; ++i) {
    const auto pick = rng() % 16;
    if (pick < 4) {
      Word v = 0;
      switch (rng() % 4) {
        case 0: v = static_cast<Word>(rng()); break;
        case 1: v = static_cast<Word>(rng() % map.visible_limit()); break;
        case 2: v = map.protected_bit() | static_cast<Word>(rng() % 8); break;
        default: v = static_cast<Word>(rng() % (length + 4)); break;
      }
      src += "LOADK " + reg() + ", " + std::to_string(v) + "\n";
    } else if (pick < 9) {
      src += std::string(alu[rng() % 9]) + " " + reg() + ", " + reg() + ", " + reg() + "\n";
    } else if (pick < 14) {
      const std::string op = mem[rng() % 4];
      src += op + (op[0] == 'L' ? " " + reg() + ", " + reg() : " " + reg() + ", " + reg()) + "\n";
    } else {
      const std::string op = ctl[rng() % 6];
      if (op == "BEQ" || op == "BLT") {
        src += op + " " + reg() + ", " + reg() + ", " + reg() + "\n";
      } else if (op == "JMPR" || op == "CALL") {
        src += op + " " + reg() + "\n";
      } else if (op == "RET" || rng() % 4 == 0) {
        src += op + "\n";
      } else {
        src += "NOP\n";
      }
    }
  }
  BinaryImage img = assemble(src, AssemblerOptions{map});
  for (auto& w : img.words) {
    if (rng() % 32 == 0) w = static_cast<Word>(rng());
  }
  return img;
}

struct IsolationReport {
  std::size_t trials = 0;
  std::size_t attacker_faults = 0;
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

inline constexpr Cycles kIsolationCycles = 1200;

inline SystemConfig isolation_config(unsigned attacker, const BinaryImage& attack) {
  SystemConfig cfg = single_processor_config({120, 0, {{1, 0, 36}, {2, 40, 36}, {3, 80, 36}}, 4});
  const BinaryImage victim = assemble(isolation_victim_source(), AssemblerOptions{cfg.map});
  for (unsigned k = 1; k <= kPartitionCount; ++k) cfg.processors[0].images[k - 1] = k == attacker ? attack : victim;
  return cfg;
}

/// Everything a partition owns: its event stream, context, segment and flag.
struct PartitionView {
  std::vector<TraceEvent> events;
  PartitionContext context;
  std::vector<Word> segment;
  Word flag = 0;
  friend bool operator==(const PartitionView&, const PartitionView&) = default;
};

inline PartitionView partition_view(System& sys, unsigned k) {
  PartitionView v;
  for (const auto& e : sys.trace().events()) {
    if (e.source == Component::part(1, k)) v.events.push_back(e);
  }
  v.context = sys.processor(1).context(k);
  const AddressMap& map = sys.config().map;
  const auto& words = sys.processor(1).memory().words();
  const auto first = words.begin() + map.physical(k, 0);
  v.segment.assign(first, first + map.segment_words());
  v.flag = (sys.read_processor_flags(1) >> partition_flag_shift(k)) & kPartitionFlagMask;
  return v;
}

/// Runs `per_partition` random programs in each partition while the other two
/// run the victim program, and compares the victims against a run where the
/// attacker just halts.
inline IsolationReport verify_isolation(std::uint64_t seed, std::size_t per_partition, unsigned threads) {
  std::array<std::array<PartitionView, kPartitionCount>, kPartitionCount> baseline;
  for (unsigned a = 1; a <= kPartitionCount; ++a) {
    System sys(isolation_config(a, assemble("HALT\n")));
    sys.run(kIsolationCycles);
    for (unsigned k = 1; k <= kPartitionCount; ++k) baseline[a - 1][k - 1] = partition_view(sys, k);
  }

  const std::size_t n = per_partition * kPartitionCount;
  std::vector<std::vector<std::string>> found(n);
  std::vector<char> faulted(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    const unsigned attacker = static_cast<unsigned>(i % kPartitionCount) + 1;
    std::mt19937_64 rng(seed * 1'000'003 + i);
    const AddressMap map{};
    System sys(isolation_config(attacker, random_program(rng, 20 + rng() % 100, map)));
    sys.run(kIsolationCycles);
    faulted[i] = sys.processor(1).context(attacker).faulted;
    const std::string tag = "trial " + std::to_string(i) + " attacker p" + std::to_string(attacker) + ": ";
    for (const auto& e : sys.trace().events()) {
      if (e.source == Component::part(1, attacker) && e.kind == EventKind::mem_wr) {
        const unsigned seg = map.segment_of(static_cast<Word>(e.a));
        if (seg != 0 && seg != attacker) found[i].push_back(tag + "wrote segment " + std::to_string(seg));
      }
    }
    for (unsigned k = 1; k <= kPartitionCount; ++k) {
      if (k == attacker) continue;
      const PartitionView v = partition_view(sys, k);
      const PartitionView& want = baseline[attacker - 1][k - 1];
      if (v.segment != want.segment) found[i].push_back(tag + "segment of p" + std::to_string(k) + " changed");
      if (v.flag != want.flag) found[i].push_back(tag + "flag of p" + std::to_string(k) + " changed");
      if (!(v.context == want.context) || v.events != want.events) {
        found[i].push_back(tag + "execution of p" + std::to_string(k) + " changed");
      }
    }
  });

  IsolationReport report;
  report.trials = n;
  for (std::size_t i = 0; i < n; ++i) {
    report.attacker_faults += faulted[i] != 0;
    for (auto& v : found[i]) report.violations.push_back(std::move(v));
  }
  return report;
}

}  // namespace partaa
