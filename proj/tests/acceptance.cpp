// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "partaa/memory.hpp"
#include "partaa/scenarios.hpp"
#include "partaa/verify.hpp"

using namespace partaa;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// The MCU rule evaluated bit by bit on an array of address bits.
std::optional<Word> mcu_pseudocode(unsigned n, Word visible, unsigned flag) {
  if (flag == 0) return std::nullopt;
  std::vector<int> addr(n);
  for (unsigned i = 0; i < n; ++i) addr[i] = (visible >> i) & 1;
  if (addr[n - 2] == 1) {
    addr[n - 1] = (flag >> 1) & 1;
    addr[n - 2] = flag & 1;
  } else {
    addr[n - 1] = 0;
    addr[n - 2] = 0;
  }
  Word out = 0;
  for (unsigned i = 0; i < n; ++i) out |= Word(addr[i]) << i;
  return out;
}

void mcu_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t pairs = 0, mismatches = 0;
  for (unsigned n : {4u, 6u, 8u, 10u}) {
    const AddressMap map{n, 1};
    for (Word v = 0; v < map.visible_limit(); ++v) {
      for (unsigned flag = 0; flag < 4; ++flag) {
        ++pairs;
        if (translate(map, v, static_cast<PartitionFlag>(flag)) != mcu_pseudocode(n, v, flag)) ++mismatches;
      }
    }
  }
  const double s = seconds_since(t0);
  report(1, "MCU oracle equivalence", mismatches == 0 && s < 5.0,
         std::to_string(mismatches) + " mismatches over " + std::to_string(pairs) + " pairs, " + fmt(s) +
             " s (limit 5 s)");
}

void isolation_fuzz(unsigned threads) {
  const auto r = verify_isolation(2024, 1000, threads);
  std::string detail = std::to_string(r.trials) + " random programs (1000 per partition), " +
                       std::to_string(r.attacker_faults) + " faulted, " + std::to_string(r.violations.size()) +
                       " violations";
  if (!r.violations.empty()) detail += "; first: " + r.violations.front();
  report(2, "robust partitioning fuzz", r.ok() && r.trials == 3000, detail);
}

void wcet_exactness(unsigned threads) {
  const auto r = verify_wcet(1, 500, threads);
  std::string detail = std::to_string(r.trials.size()) + " triples, " + std::to_string(r.failures()) +
                       " mismatches (tolerance 0 cycles)";
  for (const auto& t : r.trials) {
    if (!t.ok()) {
      detail += "; first: tau_a=" + std::to_string(t.task) + " tau_p=" + std::to_string(t.budget) +
                " lambda_p=" + std::to_string(t.period) + " formula=" + std::to_string(t.expected) +
                " simulated=" + std::to_string(t.simulated);
      break;
    }
  }
  report(3, "WCET formula exactness", r.ok() && r.trials.size() == 500, detail);
}

void case_agreement(unsigned threads) {
  const auto c = verify_cases(1, 200, threads);
  const auto c3 = verify_case3(threads);
  std::string detail = "case1/case2 " + std::to_string(c.case1.size() + c.case2.size()) + " trials, " +
                       std::to_string(c.failures()) + " mismatches; case3 " + std::to_string(c3.phases) +
                       " phases, max simulated " + std::to_string(c3.max_response) + " <= formula " +
                       std::to_string(c3.formula) + " (" + (c3.tight() ? "tight" : "not tight") +
                       ", worst phase " + std::to_string(c3.worst_phase) + ")";
  report(4, "case 1/2/3 agreement", c.ok() && c3.ok(), detail);
}

void noc_bound(unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cells = verify_noc_sweep(false, threads);
  const double s = seconds_since(t0);
  std::size_t bad = 0;
  std::string first;
  for (const auto& m : cells) {
    if (!m.tight()) {
      if (bad++ == 0) {
        first = "; first: S_total=" + std::to_string(m.s_total) + " S_channel=" + std::to_string(m.s_channel) +
                " t_slot=" + std::to_string(m.t_slot) + " hub " + std::to_string(m.worst_hub) + "/" +
                std::to_string(m.bound_hub) + " e2e " + std::to_string(m.worst_e2e) + "/" +
                std::to_string(m.bound_e2e());
      }
    }
  }
  report(5, "NoC bound soundness and tightness", bad == 0 && s < 60.0,
         std::to_string(cells.size()) + " configurations, " + std::to_string(bad) +
             " not equal to bound (tolerance 0), " + fmt(s) + " s (limit 60 s)" + first);
}

struct HandshakeResult {
  bool complete = false;
  bool ordered = false;
  bool lossless = false;
  bool frozen_at_reception = true;
};

HandshakeResult run_handshake(bool inactive) {
  constexpr unsigned k = 100;
  System sys(handshake_scenario(k, inactive));
  sys.run(handshake_cycle_budget(k));
  HandshakeResult r;
  r.complete = sys.processor(1).context(1).halted && sys.processor(2).context(1).halted &&
               sys.trace().of_kind(EventKind::fault).empty();
  const AddressMap& m = sys.config().map;
  r.lossless = true;
  for (unsigned i = 0; i < k; ++i) {
    if (sys.processor(2).memory().ram(m.physical(1, handshake_log_offset(m) + i)) != i + 1) r.lossless = false;
  }
  const Word rxdata = m.physical(1, m.rx_data_base() + kHandshakeChannel);
  std::string seq;
  for (const auto& e : sys.trace().events()) {
    if (e.kind == EventKind::flag_set && e.source == Component::part(2, 1) && e.b == 1) seq += 'x';
    if (e.kind == EventKind::pkt_send) seq += 's';
    if (e.kind == EventKind::flag_set && e.source == Component::part(1, 1) && e.b == 1) seq += 'm';
    if (e.kind == EventKind::mem_rd && e.source == Component::part(2, 1) && e.a == rxdata) seq += 'r';
    if (e.kind == EventKind::flag_set && e.source == Component::part(2, 1) && e.b == 2) seq += 'y';
    if (e.kind == EventKind::pkt_recv && sys.processor(2).schedule().active_at(e.cycle) == 1) {
      r.frozen_at_reception = false;
    }
  }
  std::string want;
  for (unsigned i = 0; i < k; ++i) want += "xsmry";
  r.ordered = seq == want;
  return r;
}

void handshake() {
  const auto a = run_handshake(false);
  const auto b = run_handshake(true);
  auto describe = [](const HandshakeResult& r) {
    return std::string(r.complete ? "complete" : "incomplete") + "/" + (r.ordered ? "ordered" : "misordered") + "/" +
           (r.lossless ? "lossless" : "lossy");
  };
  report(6, "flag handshake K=100", a.complete && a.ordered && a.lossless && b.complete && b.ordered && b.lossless &&
                                        b.frozen_at_reception,
         "consumer active: " + describe(a) + "; consumer inactive at every reception: " + describe(b) +
             (b.frozen_at_reception ? "" : " (a reception hit an active window)"));
}

std::uint64_t run_hash(const SystemConfig& cfg, Cycles cycles) {
  System sys(cfg);
  sys.run(cycles);
  return sys.trace().hash();
}

void determinism() {
  std::mt19937_64 rng(77);
  const struct {
    const char* name;
    SystemConfig cfg;
    Cycles cycles;
  } golden[] = {
      {"handshake", handshake_scenario(100), handshake_cycle_budget(100)},
      {"handshake-inactive", handshake_scenario(100, true), handshake_cycle_budget(100)},
      {"case3", case3_config(24), 4000},
      {"isolation", isolation_config(2, random_program(rng, 80, AddressMap{})), kIsolationCycles},
  };
  std::size_t unstable = 0;
  for (const auto& g : golden) {
    const auto h = run_hash(g.cfg, g.cycles);
    for (int i = 1; i < 10; ++i) {
      if (run_hash(g.cfg, g.cycles) != h) {
        ++unstable;
        break;
      }
    }
  }

  // Every verdict and every measured number, single-threaded versus four workers.
  std::size_t diverged = 0;
  auto same = [&](bool eq) { diverged += !eq; };
  {
    const auto a = verify_wcet(9, 200, 1), b = verify_wcet(9, 200, 4);
    bool eq = a.ok() == b.ok() && a.trials.size() == b.trials.size();
    for (std::size_t i = 0; eq && i < a.trials.size(); ++i) eq = a.trials[i].simulated == b.trials[i].simulated;
    same(eq);
  }
  {
    const auto a = verify_cases(9, 50, 1), b = verify_cases(9, 50, 4);
    bool eq = a.ok() == b.ok() && a.case1.size() == b.case1.size() && a.case2.size() == b.case2.size();
    for (std::size_t i = 0; eq && i < a.case1.size(); ++i) eq = a.case1[i].simulated == b.case1[i].simulated;
    for (std::size_t i = 0; eq && i < a.case2.size(); ++i) eq = a.case2[i].simulated == b.case2[i].simulated;
    same(eq);
  }
  {
    const auto a = verify_case3(1), b = verify_case3(4);
    same(a.ok() == b.ok() && a.max_response == b.max_response && a.worst_phase == b.worst_phase);
  }
  for (bool broken : {false, true}) {
    const auto a = verify_noc_sweep(broken, 1, 5), b = verify_noc_sweep(broken, 4, 5);
    bool eq = a.size() == b.size();
    for (std::size_t i = 0; eq && i < a.size(); ++i) {
      eq = a[i].tight() == b[i].tight() && a[i].worst_hub == b[i].worst_hub && a[i].worst_phase == b[i].worst_phase;
    }
    same(eq);
  }
  {
    const auto a = verify_isolation(5, 50, 1), b = verify_isolation(5, 50, 4);
    same(a.violations == b.violations && a.attacker_faults == b.attacker_faults);
  }
  report(7, "determinism", unstable == 0 && diverged == 0,
         "4 golden scenarios x 10 runs, " + std::to_string(unstable) + " with differing trace hashes; " +
             "6 verify sweeps at 1 and 4 threads, " + std::to_string(diverged) + " with differing results");
}

void schedule_validator() {
  struct Fixture {
    ScheduleRule rule;
    bool violating;
    PartitionSchedule schedule;
  };
  const Fixture fixtures[] = {
      {ScheduleRule::periodic, false, {300, 0, {{1, 0, 200}, {2, 204, 92}}, 4}},
      {ScheduleRule::periodic, true, {300, 0, {{1, 0, 200}, {2, 204, 120}}, 4}},
      {ScheduleRule::uniform_priority, false, {300, 0, {{1, 0, 100}, {2, 104, 100}, {3, 208, 88}}, 4}},
      {ScheduleRule::uniform_priority, true, {300, 0, {{1, 0, 100}, {2, 90, 100}, {3, 208, 88}}, 4}},
      {ScheduleRule::time_triggered, false, {300, 0, {{1, 0, 148}, {2, 152, 144}}, 4}},
      {ScheduleRule::time_triggered, true, {300, 0, {{1, 0, 148}, {2, 150, 146}}, 4}},
  };
  int correct = 0;
  std::string wrong;
  for (const auto& f : fixtures) {
    const bool flagged = validate_schedule(f.schedule).violates(f.rule);
    if (flagged == f.violating) {
      ++correct;
    } else {
      wrong += std::string(" ") + std::string(to_string(f.rule)) + (f.violating ? "/failing" : "/passing");
    }
  }
  report(8, "schedule validator", correct == 6,
         std::to_string(correct) + "/6 fixtures classified correctly" + (wrong.empty() ? "" : ";" + wrong));
}

}  // namespace

int main() {
  const unsigned threads = sweep_threads();
  mcu_equivalence();
  isolation_fuzz(threads);
  wcet_exactness(threads);
  case_agreement(threads);
  noc_bound(threads);
  handshake();
  determinism();
  schedule_validator();
  std::printf("%s: %d of 8 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
