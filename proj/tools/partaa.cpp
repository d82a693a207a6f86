// partaa: assemble programs, validate and run system configurations, evaluate
// the timing formulas and check them against the simulator.
//
// Exit codes: 0 success, 1 domain or validation failure, 2 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "partaa/analysis.hpp"
#include "partaa/assembler.hpp"
#include "partaa/config.hpp"
#include "partaa/scenarios.hpp"
#include "partaa/system.hpp"
#include "partaa/verify.hpp"

namespace fs = std::filesystem;
using namespace partaa;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kIo = 2;

struct Options {
  std::string input, output, trace_out, dump_out, config;
  std::string second;
  Cycles cycles = 100000;
  bool no_pipeline = false;
  unsigned address_bits = 16;

  // analyze
  std::string formula;
  std::vector<Cycles> tasks;
  Cycles task = 0, budget = 0, period = 0, gamma_a = 0, gamma_b = 0, wcet_b = 0, switch_overhead = 4;
  Cycles wcet_a = 0, comm_delay = 0;
  std::vector<Cycles> budgets;
  std::uint64_t s_total = 0, s_channel = 0;
  Cycles t_slot = 8;
  double clock_mhz = 50.0;
  bool synchronized = false;

  // verify
  std::string mode = "wcet";
  bool sweep = false, broken = false;
  std::uint64_t seed = 1;
  std::size_t trials = 500;

  // scenario
  std::string scenario;
  unsigned iterations = 100;
  bool inactive = false;
};

std::string ms(Cycles c, double mhz) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << static_cast<double>(c) / (mhz * 1000.0);
  return os.str();
}

int cmd_assemble(const Options& o) {
  AddressMap map;
  map.address_bits = o.address_bits;
  const BinaryImage img = assemble(read_file(o.input), {map});
  write_file(o.output, serialize_image(img), true);
  std::cout << o.output << ": " << img.words.size() << " words, " << img.data_init.size() << " data words\n";
  return kOk;
}

int cmd_disassemble(const Options& o) {
  const std::string text = disassemble(deserialize_image(read_file(o.input, true)));
  if (o.output.empty()) {
    std::cout << text;
  } else {
    write_file(o.output, text);
  }
  return kOk;
}

int cmd_validate(const Options& o) {
  const SystemConfig cfg = load_config(o.config);
  const auto problems = validate_config(cfg);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "error: " << p << '\n';
    return kDomain;
  }
  std::cout << o.config << ": ok (" << cfg.processors.size() << " processors, " << cfg.noc.channels.size()
            << " channels)\n";
  return kOk;
}

int cmd_run(const Options& o) {
  System sys(load_config(o.config), !o.no_pipeline);
  sys.run(o.cycles);
  if (!o.trace_out.empty()) {
    std::ofstream out(o.trace_out);
    if (!out) throw IoError("cannot write " + o.trace_out);
    sys.trace().write(out);
  }
  if (!o.dump_out.empty()) {
    std::ofstream out(o.dump_out);
    if (!out) throw IoError("cannot write " + o.dump_out);
    sys.write_dump(out);
  }
  std::size_t faults = 0, recv = 0;
  for (const auto& e : sys.trace().events()) {
    faults += e.kind == EventKind::fault;
    recv += e.kind == EventKind::pkt_recv;
  }
  std::cout << "cycles " << sys.cycle() << '\n'
            << "halted " << (sys.all_halted() ? "yes" : "no") << '\n'
            << "events " << sys.trace().size() << '\n'
            << "packets_received " << recv << '\n'
            << "faults " << faults << '\n'
            << "trace_hash " << hash_hex(sys.trace().hash()) << '\n';
  return kOk;
}

int cmd_analyze(const Options& o) {
  Cycles bound = 0;
  const std::string& f = o.formula;
  if (f == "partition") {
    bound = partitioned_wcet(o.task, o.budget, o.period);
    std::cout << "formula partitioned_wcet\ntask " << o.task << "\nbudget " << o.budget << "\nperiod " << o.period << '\n';
  } else if (f == "case1") {
    bound = wcet_case1(o.tasks, o.budget);
    std::cout << "formula case1\ntasks " << o.tasks.size() << "\nbudget " << o.budget << '\n';
  } else if (f == "case2") {
    bound = wcet_case2(o.budget, o.gamma_a, o.gamma_b, o.wcet_b, o.switch_overhead);
    std::cout << "formula case2\nbudget_first " << o.budget << "\ngamma_a " << o.gamma_a << "\ngamma_b " << o.gamma_b
              << "\nwcet_b " << o.wcet_b << "\nswitch_overhead " << o.switch_overhead << '\n';
  } else if (f == "case3") {
    std::optional<ConsumerBudgets> b;
    if (o.budgets.size() == 3) b = ConsumerBudgets{o.budgets[0], o.budgets[1], o.budgets[2]};
    else if (!o.budgets.empty()) throw AnalysisError("--budgets takes exactly three values");
    std::optional<Cycles> cd;
    if (o.synchronized) cd = o.comm_delay;
    bound = wcet_case3(o.wcet_a, o.wcet_b, cd, b, o.synchronized);
    std::cout << "formula case3\nsynchronized " << (o.synchronized ? "yes" : "no") << "\nwcet_a " << o.wcet_a
              << "\nwcet_b " << o.wcet_b << '\n';
  } else if (f == "noc") {
    const Cycles hub = channel_latency(o.s_total, o.s_channel, o.t_slot);
    bound = end_to_end_bound(o.s_total, o.s_channel, o.t_slot);
    std::cout << "formula channel_latency\ns_total " << o.s_total << "\ns_channel " << o.s_channel << "\nt_slot "
              << o.t_slot << "\nhub_latency " << hub << '\n';
  } else if (f == "schedule") {
    const SystemConfig cfg = load_config(o.config);
    bool ok = true;
    for (std::size_t p = 0; p < cfg.processors.size(); ++p) {
      PartitionSchedule s = cfg.processors[p].schedule;
      s.switch_overhead = cfg.delta_so;
      const auto report = validate_schedule(s);
      std::cout << "processor " << p + 1 << ": " << (report.ok() ? "ok" : "violations") << '\n';
      for (const auto& v : report.violations) std::cout << "  " << to_string(v.rule) << ": " << v.message << '\n';
      ok = ok && report.ok();
    }
    return ok ? kOk : kDomain;
  } else {
    throw AnalysisError("unknown formula \"" + f + "\"");
  }
  std::cout << "bound_cycles " << bound << "\nbound_ms " << ms(bound, o.clock_mhz) << '\n';
  return kOk;
}

int verify_wcet_mode(const Options& o, unsigned threads) {
  const auto w = verify_wcet(o.seed, o.trials, threads);
  const auto c = verify_cases(o.seed, std::max<std::size_t>(1, o.trials / 5), threads);
  std::cout << "check           trials  failures\n";
  std::cout << "partitioned   " << std::setw(8) << w.trials.size() << std::setw(10) << w.failures() << '\n';
  auto count_bad = [](const std::vector<CaseTrial>& v) {
    return std::count_if(v.begin(), v.end(), [](const auto& t) { return !t.ok(); });
  };
  std::cout << "case1         " << std::setw(8) << c.case1.size() << std::setw(10) << count_bad(c.case1) << '\n';
  std::cout << "case2         " << std::setw(8) << c.case2.size() << std::setw(10) << count_bad(c.case2) << '\n';
  for (std::size_t i = 0; i < w.trials.size(); ++i) {
    const auto& t = w.trials[i];
    if (t.ok()) continue;
    std::cout << "counterexample seed=" << o.seed << " trial=" << i << " task=" << t.task << " budget=" << t.budget
              << " period=" << t.period << " expected=" << t.expected << " simulated=" << t.simulated
              << " standalone=" << t.standalone << '\n';
  }
  for (const auto* v : {&c.case1, &c.case2}) {
    for (const auto& t : *v) {
      if (!t.ok()) {
        std::cout << "counterexample seed=" << o.seed << ' ' << t.inputs << " expected=" << t.expected
                  << " simulated=" << t.simulated << '\n';
      }
    }
  }
  const bool ok = w.ok() && c.ok();
  std::cout << "verdict " << (ok ? "pass" : "fail") << '\n';
  return ok ? kOk : kDomain;
}

int verify_noc_mode(const Options& o, unsigned threads) {
  std::vector<ChannelMeasurement> rows;
  if (o.sweep) {
    rows = verify_noc_sweep(o.broken, threads);
  } else {
    const NocConfig cfg = o.config.empty() ? default_noc() : effective_noc(load_config(o.config));
    rows = verify_noc_config(cfg, o.broken, threads);
  }
  std::cout << "channel  S  Sc  t  bound  worst  margin  e2e_bound  e2e_worst  phase  tight\n";
  bool ok = true;
  for (const auto& m : rows) {
    std::cout << std::setw(7) << m.channel << std::setw(3) << m.s_total << std::setw(4) << m.s_channel << std::setw(3)
              << m.t_slot << std::setw(7) << m.bound_hub << std::setw(7) << m.worst_hub << std::setw(8)
              << static_cast<long long>(m.bound_hub) - static_cast<long long>(m.worst_hub) << std::setw(11)
              << m.bound_e2e() << std::setw(11) << m.worst_e2e << std::setw(7) << m.worst_phase << std::setw(7)
              << (m.tight() ? "yes" : "no") << '\n';
    // The exhaustive family is fully owned, so the bound must be reached exactly.
    const bool row_ok = o.sweep ? m.tight() : m.sound();
    if (!row_ok) {
      std::cout << "counterexample channel=" << m.channel << " S=" << m.s_total << " Sc=" << m.s_channel
                << " t=" << m.t_slot << " phase=" << m.worst_phase << " worst=" << m.worst_hub
                << " bound=" << m.bound_hub << '\n';
    }
    ok = ok && row_ok;
  }
  std::cout << "verdict " << (ok ? "pass" : "fail") << '\n';
  return ok ? kOk : kDomain;
}

int verify_case3_mode(unsigned threads) {
  const auto r = verify_case3(threads);
  std::cout << "wcet_a " << r.wcet_a << "\nwcet_b " << r.wcet_b << "\nbudgets " << r.budgets.p1 << ' ' << r.budgets.p2
            << ' ' << r.budgets.p3 << "\nphases " << r.phases << "\nformula " << r.formula << "\nmax_simulated "
            << r.max_response << "\nworst_phase " << r.worst_phase << "\nmargin "
            << static_cast<long long>(r.formula) - static_cast<long long>(r.max_response) << "\ntight "
            << (r.tight() ? "yes" : "no") << "\nincomplete " << r.incomplete << "\nverdict "
            << (r.ok() ? "pass" : "fail") << '\n';
  return r.ok() ? kOk : kDomain;
}

int cmd_verify(const Options& o) {
  const unsigned threads = sweep_threads();
  if (o.mode == "wcet") return verify_wcet_mode(o, threads);
  if (o.mode == "noc") return verify_noc_mode(o, threads);
  if (o.mode == "case3") return verify_case3_mode(threads);
  throw AnalysisError("unknown mode \"" + o.mode + "\"");
}

int cmd_trace_diff(const Options& o) {
  std::istringstream a(read_file(o.input)), b(read_file(o.second));
  std::string la, lb;
  std::size_t line = 0;
  while (true) {
    const bool ha = static_cast<bool>(std::getline(a, la));
    const bool hb = static_cast<bool>(std::getline(b, lb));
    ++line;
    if (!ha && !hb) break;
    if (ha != hb || la != lb) {
      std::cout << "first difference at line " << line << "\n< " << (ha ? la : "<end>") << "\n> "
                << (hb ? lb : "<end>") << '\n';
      return kDomain;
    }
  }
  std::cout << "identical (" << line - 1 << " lines)\n";
  return kOk;
}

int cmd_scenario(const Options& o) {
  if (o.scenario != "handshake") throw AnalysisError("unknown scenario \"" + o.scenario + "\"");
  const SystemConfig cfg = handshake_scenario(o.iterations, o.inactive);
  fs::create_directories(o.output);
  write_file(fs::path(o.output) / "alpha.s", handshake_producer_source(o.iterations, cfg.map));
  write_file(fs::path(o.output) / "beta.s", handshake_consumer_source(o.iterations, cfg.map));
  const auto j = config_to_json(cfg, [](unsigned p, unsigned) { return p == 1 ? "alpha.s" : "beta.s"; });
  write_file(fs::path(o.output) / "system.json", j.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(o.output) / "system.json").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned multi-processor simulator and timing analyzer"};
  app.require_subcommand(1);
  Options o;

  auto* as = app.add_subcommand("assemble", "Assemble a source file into a binary image");
  as->add_option("input", o.input, "assembly source")->required();
  as->add_option("-o,--output", o.output, "image file")->required();
  as->add_option("--address-bits", o.address_bits, "address width n");

  auto* dis = app.add_subcommand("disassemble", "Print the source of a binary image");
  dis->add_option("input", o.input, "image file")->required();
  dis->add_option("-o,--output", o.output, "write to file instead of stdout");

  auto* val = app.add_subcommand("validate", "Check a system configuration");
  val->add_option("config", o.config, "system configuration")->required();

  auto* run = app.add_subcommand("run", "Simulate a system configuration");
  run->add_option("config", o.config, "system configuration")->required();
  run->add_option("--cycles", o.cycles, "cycle limit");
  run->add_option("--trace", o.trace_out, "trace output file");
  run->add_option("--dump", o.dump_out, "final memory dump file");
  run->add_flag("--no-pipeline", o.no_pipeline, "omit fetch/retire/memory events from the trace");

  auto* an = app.add_subcommand("analyze", "Evaluate a timing formula");
  an->add_option("formula", o.formula, "partition | case1 | case2 | case3 | noc | schedule")->required();
  an->add_option("--config", o.config, "configuration (schedule)");
  an->add_option("--task", o.task, "standalone WCET of the task");
  an->add_option("--tasks", o.tasks, "task WCETs (case1)")->delimiter(',');
  an->add_option("--budget", o.budget, "partition budget");
  an->add_option("--period", o.period, "partition period");
  an->add_option("--gamma-a", o.gamma_a, "release offset of a (case2)");
  an->add_option("--gamma-b", o.gamma_b, "release offset of b (case2)");
  an->add_option("--wcet-a", o.wcet_a, "WCET of a (case3)");
  an->add_option("--wcet-b", o.wcet_b, "WCET of b");
  an->add_option("--switch-overhead", o.switch_overhead, "partition switch overhead");
  an->add_option("--comm-delay", o.comm_delay, "end-to-end communication delay (case3)");
  an->add_option("--budgets", o.budgets, "consumer partition budgets p1,p2,p3 (case3)")->delimiter(',');
  an->add_flag("--synchronized", o.synchronized, "partitions are synchronised (case3)");
  an->add_option("--s-total", o.s_total, "slot table size");
  an->add_option("--s-channel", o.s_channel, "slots owned by the channel");
  an->add_option("--t-slot", o.t_slot, "slot length in cycles");
  an->add_option("--clock-mhz", o.clock_mhz, "nominal clock for the millisecond figure");

  auto* ver = app.add_subcommand("verify", "Check the formulas against simulation");
  ver->add_option("config", o.config, "system configuration (noc mode)");
  ver->add_option("--mode", o.mode, "wcet | noc | case3")->check(CLI::IsMember({"wcet", "noc", "case3"}));
  ver->add_flag("--sweep", o.sweep, "noc: exhaustive family S_total <= 8");
  ver->add_option("--seed", o.seed, "random seed (wcet)");
  ver->add_option("--trials", o.trials, "random trials (wcet)");
  ver->add_flag("--break-arbitration", o.broken, "noc: use the broken arbiter test hook");

  auto* td = app.add_subcommand("trace-diff", "Compare two trace files");
  td->add_option("a", o.input, "first trace")->required();
  td->add_option("b", o.second, "second trace")->required();

  auto* sc = app.add_subcommand("scenario", "Write a canned scenario configuration");
  sc->add_option("name", o.scenario, "handshake")->required();
  sc->add_option("--iterations", o.iterations, "number of exchanges");
  sc->add_flag("--inactive", o.inactive, "consumer inactive at every reception");
  sc->add_option("--out", o.output, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kDomain;
  }

  try {
    if (*as) return cmd_assemble(o);
    if (*dis) return cmd_disassemble(o);
    if (*val) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*an) return cmd_analyze(o);
    if (*ver) return cmd_verify(o);
    if (*td) return cmd_trace_diff(o);
    if (*sc) return cmd_scenario(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "error: " << p << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kDomain;
}
