#include <gtest/gtest.h>

#include <random>

#include "partaa/assembler.hpp"
#include "partaa/system.hpp"
#include "partaa/verify.hpp"

using namespace partaa;

namespace {

SystemConfig one_partition(const std::string& src, PartitionSchedule s = PartitionSchedule::always(1)) {
  SystemConfig cfg = single_processor_config(std::move(s), 0);
  cfg.processors[0].images[0] = assemble(src);
  return cfg;
}

std::vector<Cycles> cycles_of(const Trace& t, EventKind k) {
  std::vector<Cycles> out;
  for (const auto& e : t.events()) {
    if (e.kind == k) out.push_back(e.cycle);
  }
  return out;
}

}  // namespace

TEST(Pipeline, NopStreamRetiresOnePerCycleAfterFill) {
  System sys(one_partition("NOP\nNOP\nNOP\nNOP\nNOP\nHALT"));
  sys.run(100);
  const auto retires = cycles_of(sys.trace(), EventKind::retire);
  ASSERT_EQ(retires.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(retires[i], 3 + i);
  EXPECT_EQ(cycles_of(sys.trace(), EventKind::fetch).front(), 0u);
  EXPECT_EQ(cycles_of(sys.trace(), EventKind::halt).front(), 8u);
}

TEST(Pipeline, StraightLineTakesKPlusFillForAnyData) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + rng() % 40;
    std::string src = ".data\n.word A " + std::to_string(rng()) + "\n.word B " + std::to_string(rng()) +
                      "\n.text\nLOADK r1, A\nLOADK r2, B\n";
    for (std::size_t i = 0; i < k; ++i) {
      static const char* ops[] = {"ADD", "SUB", "MUL", "XOR", "SLL", "SRL", "SLT", "AND", "OR"};
      src += std::string(ops[rng() % 9]) + " r" + std::to_string(1 + rng() % 3) + ", r1, r2\n";
    }
    src += "ST.S r1, r2\nLD.S r3, r1\nHALT\n";
    const Cycles straight = 2 + k + 2;
    System sys(one_partition(src));
    sys.run(1000);
    const auto halts = cycles_of(sys.trace(), EventKind::halt);
    ASSERT_EQ(halts.size(), 1u);
    // The last non-control instruction retires at straight + 3 - 1; HALT after.
    const auto retires = cycles_of(sys.trace(), EventKind::retire);
    EXPECT_EQ(retires[straight - 1], straight + kPipelineDepth - 2);
    EXPECT_EQ(halts[0] + 1, straight + instruction_cost(Opcode::HALT));
  }
}

TEST(Pipeline, BranchesCostTheSameTakenOrNot) {
  for (const char* cond : {"0", "1"}) {
    const std::string src = std::string(".data\n.word C ") + cond +
                            "\n.text\nLOADK r1, C\nLOADK r3, tgt\nBEQ r1, r0, r3\ntgt: HALT\n";
    System sys(one_partition(src));
    sys.run(100);
    EXPECT_EQ(cycles_of(sys.trace(), EventKind::halt).at(0) + 1, 2 + 4 + 4u) << cond;
  }
}

TEST(Pipeline, CallAndReturnUseTheHardwareStack) {
  System sys(one_partition(
      "LOADK r1, fn\n"
      "CALL r1\n"
      "HALT\n"
      "fn: LOADK r2, 7\n"
      "RET\n"));
  sys.run(100);
  const auto& ctx = sys.processor(1).context(1);
  EXPECT_TRUE(ctx.halted);
  EXPECT_FALSE(ctx.faulted);
  EXPECT_EQ(ctx.registers[2], 7u);
  EXPECT_EQ(ctx.stack.depth, 0u);
  EXPECT_EQ(cycles_of(sys.trace(), EventKind::halt).at(0) + 1, 1 + 4 + 1 + 4 + 4u);
}

TEST(Pipeline, StackFaultsAreLocal) {
  SystemConfig cfg = one_partition("RET\n", {30, 0, {{1, 0, 10}, {2, 14, 10}}, 4});
  cfg.delta_so = 4;
  cfg.processors[0].schedule.switch_overhead = 4;
  cfg.processors[0].images[1] = assemble("LOADK r1, 3\nLOADK r2, 4\nADD r3, r1, r2\nHALT\n");
  System sys(cfg);
  sys.run(200);
  EXPECT_TRUE(sys.processor(1).context(1).faulted);
  EXPECT_FALSE(sys.processor(1).context(2).faulted);
  EXPECT_EQ(sys.processor(1).context(2).registers[3], 7u);
  const auto faults = sys.trace().of_kind(EventKind::fault);
  ASSERT_EQ(faults.size(), 1u);
  EXPECT_EQ(faults[0].a, static_cast<std::uint64_t>(FaultReason::stack_underflow));
}

TEST(Pipeline, InvalidWordFaultsOnlyItsPartition) {
  BinaryImage bad;
  bad.words = {encode({Opcode::NOP}), 0xFF000000u, encode({Opcode::HALT})};
  SystemConfig cfg = single_processor_config({30, 0, {{1, 0, 10}, {2, 14, 10}}, 4});
  cfg.processors[0].images[0] = bad;
  cfg.processors[0].images[1] = assemble("LOADK r1, 1\nST.P r0, r1\nHALT\n");
  System sys(cfg);
  sys.run(200);
  EXPECT_TRUE(sys.processor(1).context(1).faulted);
  EXPECT_TRUE(sys.processor(1).context(2).halted);
  EXPECT_FALSE(sys.processor(1).context(2).faulted);
  EXPECT_EQ((sys.read_processor_flags(1) >> partition_flag_shift(2)) & 0x3FF, 1u);
  EXPECT_EQ((sys.read_processor_flags(1) >> partition_flag_shift(1)) & 0x3FF, 0u);
}

TEST(Pipeline, RunningOffTheEndFaults) {
  System sys(one_partition("NOP\n"));
  sys.run(50);
  const auto faults = sys.trace().of_kind(EventKind::fault);
  ASSERT_EQ(faults.size(), 1u);
  EXPECT_EQ(faults[0].a, static_cast<std::uint64_t>(FaultReason::pc_out_of_range));
}

TEST(Switching, InactivePartitionIsFrozen) {
  SystemConfig cfg = single_processor_config({40, 0, {{1, 0, 7}, {2, 11, 9}, {3, 24, 12}}, 4});
  const std::string loop = "LOADK r1, 1\nLOADK r3, top\ntop: ADD r2, r2, r1\nMUL r4, r2, r2\nJMPR r3\n";
  for (auto& img : cfg.processors[0].images) img = assemble(loop);
  System sys(cfg);
  std::array<PartitionContext, 3> before;
  for (Cycles c = 0; c < 400; ++c) {
    for (unsigned p = 1; p <= 3; ++p) before[p - 1] = sys.processor(1).context(p);
    const auto active = sys.processor(1).schedule().active_at(c);
    sys.step();
    for (unsigned p = 1; p <= 3; ++p) {
      if (p != active) {
        ASSERT_EQ(sys.processor(1).context(p), before[p - 1]) << "cycle " << c << " p" << p;
      }
    }
  }
  for (unsigned p = 1; p <= 3; ++p) EXPECT_GT(sys.processor(1).context(p).registers[2], 0u);
}

TEST(Switching, SwitchEventsAndActiveField) {
  SystemConfig cfg = single_processor_config({30, 0, {{1, 0, 10}, {2, 14, 10}}, 4});
  cfg.processors[0].images[0] = assemble("LOADK r1, 0\nJMPR r1\n");
  cfg.processors[0].images[1] = assemble("LOADK r1, 0\nJMPR r1\n");
  System sys(cfg);
  std::vector<std::pair<Cycles, Word>> seen;
  for (Cycles c = 0; c < 30; ++c) {
    sys.step();
    seen.emplace_back(c, sys.read_processor_flags(1) >> 30);
  }
  EXPECT_EQ(seen[0].second, 1u);
  EXPECT_EQ(seen[9].second, 1u);
  EXPECT_EQ(seen[10].second, 0u);
  EXPECT_EQ(seen[14].second, 2u);
  EXPECT_EQ(seen[24].second, 0u);
  const auto sw = sys.trace().of_kind(EventKind::switch_);
  ASSERT_EQ(sw.size(), 4u);
  EXPECT_EQ(sw[0].cycle, 0u);
  EXPECT_EQ(sw[1].cycle, 10u);
  EXPECT_EQ(sw[2].cycle, 14u);
  EXPECT_EQ(sw[3].cycle, 24u);
}

TEST(Flags, BaseStoreSetsTenBitField) {
  SystemConfig cfg = single_processor_config({30, 0, {{1, 0, 8}, {2, 12, 14}}, 4});
  cfg.processors[0].images[1] = assemble(".data\n.word V 0x12345\n.text\nLOADK r1, V\nST.P r0, r1\nHALT\n");
  System sys(cfg);
  sys.run(100);
  EXPECT_EQ((sys.read_processor_flags(1) >> 10) & 0x3FF, 0x345u);
  const AddressMap& m = cfg.map;
  EXPECT_EQ(sys.processor(1).memory().ram(m.physical(2, 0)), 0u);
  const auto set = sys.trace().of_kind(EventKind::flag_set);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].a, 2u);
  EXPECT_EQ(set[0].b, 0x345u);
}

TEST(Flags, SetPartitionFlagMasks) {
  Processor p(0, {}, PartitionSchedule::always(1), {});
  EXPECT_EQ((p.set_partition_flag(1, 0x3FF) >> 20) & 0x3FF, 0x3FFu);
  EXPECT_EQ(p.set_partition_flag(3, 0xFFFFFFFF) & 0x3FF, 0x3FFu);
  EXPECT_EQ((p.set_partition_flag(2, 0) >> 10) & 0x3FF, 0u);
  EXPECT_EQ(p.flag_word(), (0x3FFu << 20) | 0x3FFu);
  EXPECT_THROW(p.set_partition_flag(0, 1), std::out_of_range);
  EXPECT_THROW(p.set_partition_flag(4, 1), std::out_of_range);
}

TEST(Flags, WritesToFlagSlotsAreIgnored) {
  for (unsigned part = 1; part <= 3; ++part) {
    SystemConfig cfg = single_processor_config(PartitionSchedule::always(part), 0);
    cfg.processors[0].images[part - 1] = assemble("LOADK r1, 2\nLOADK r2, 0xFFFF\nST.S r1, r2\nLD.S r3, r1\nHALT\n");
    System sys(cfg);
    sys.run(100);
    EXPECT_EQ(sys.read_processor_flags(1) & 0x3FFFFFFF, 0u);
    EXPECT_EQ(sys.processor(1).context(part).registers[3] & 0x3FFFFFFF, 0u);
    EXPECT_EQ(sys.trace().of_kind(EventKind::ignored_write).size(), 1u);
  }
}

TEST(Flags, ResetStateIsZero) {
  System sys(one_partition("HALT"));
  EXPECT_EQ(sys.read_processor_flags(1), 0u);
  sys.step();
  EXPECT_EQ(sys.read_processor_flags(1) & 0x3FFFFFFF, 0u);
  EXPECT_EQ(sys.read_processor_flags(1) >> 30, 1u);
}

TEST(Flags, ActiveFieldReadsTwoWhilePartitionTwoRuns) {
  SystemConfig cfg = single_processor_config({20, 0, {{2, 0, 20}}, 4});
  cfg.processors[0].images[1] = assemble("LOADK r1, 2\nLD.S r2, r1\nHALT\n");
  System sys(cfg);
  sys.run(50);
  // The register reads the broadcast copy, one cycle old but already active.
  EXPECT_EQ(sys.processor(1).context(2).registers[2] >> 30, 2u);
}
