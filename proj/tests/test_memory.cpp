#include <gtest/gtest.h>

#include <bitset>
#include <sstream>

#include "partaa/memory.hpp"

using namespace partaa;

namespace {

// Bit-level evaluation of the MCU rule: if visible bit n-2 is set, physical
// bits [n-1:n-2] take the active-partition flag, otherwise they are 00; the
// low n-2 bits pass through. A deactivated processor (flag 00) faults.
std::optional<std::uint64_t> mcu_oracle(unsigned n, std::uint64_t visible, unsigned flag) {
  if (flag == 0) return std::nullopt;
  std::bitset<32> in(visible), out;
  for (unsigned i = 0; i + 2 < n; ++i) out[i] = in[i];
  if (in[n - 2]) {
    out[n - 1] = (flag >> 1) & 1u;
    out[n - 2] = flag & 1u;
  }
  return out.to_ullong();
}

class FakeBus : public PeripheralBus {
 public:
  Cycles now = 0;
  std::vector<Word> flags = {0x11111111, 0x22222222};
  std::vector<std::pair<Word, Word>> stores;

  Cycles clock() const override { return now; }
  std::size_t processor_count() const override { return flags.size(); }
  Word processor_flags(std::size_t i) const override { return flags.at(i); }
  Word ni_load(unsigned, Word offset, Cycles) override { return 0xA000 + offset; }
  void ni_store(unsigned, Word offset, Word value, Cycles) override { stores.emplace_back(offset, value); }
};

}  // namespace

TEST(Mcu, MatchesPseudocodeExhaustivelyUpToTenBits) {
  for (unsigned n = 4; n <= 10; ++n) {
    AddressMap map{n, 1};
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << (n - 1)); ++v) {
      for (unsigned flag = 0; flag < 4; ++flag) {
        auto got = translate(map, static_cast<Word>(v), static_cast<PartitionFlag>(flag));
        auto want = mcu_oracle(n, v, flag);
        ASSERT_EQ(got.has_value(), want.has_value()) << n << ' ' << v << ' ' << flag;
        if (got) {
          ASSERT_EQ(*got, *want) << n << ' ' << v << ' ' << flag;
        }
      }
    }
  }
}

TEST(Mcu, WorkedExamples) {
  const AddressMap map{8, 1};
  EXPECT_EQ(translate(map, 0b1000101, 0b10), Word{0b10000101});
  EXPECT_EQ(translate(map, 0b0000101, 0b01), Word{0b00000101});
  for (PartitionFlag f = 1; f <= 3; ++f) EXPECT_EQ(translate(map, 0, f), Word{0});
  EXPECT_FALSE(translate(map, 5, 0).has_value());
}

TEST(Memory, OverlayClassification) {
  MemorySystem mem;
  const AddressMap& m = mem.map();
  EXPECT_EQ(mem.classify(m.physical(0, 0), 4), AccessKind::clock);
  EXPECT_EQ(mem.classify(m.physical(0, 1), 4), AccessKind::clock);
  EXPECT_EQ(mem.classify(m.physical(0, 2), 4), AccessKind::processor_flags);
  EXPECT_EQ(mem.classify(m.physical(0, 5), 4), AccessKind::processor_flags);
  EXPECT_EQ(mem.classify(m.physical(0, 6), 4), AccessKind::ram);
  EXPECT_EQ(mem.classify(m.physical(2, 0), 4), AccessKind::partition_base);
  EXPECT_EQ(mem.classify(m.physical(2, 1), 4), AccessKind::ram);
  EXPECT_EQ(mem.classify(m.physical(3, m.rx_count_base()), 4), AccessKind::ni);
  EXPECT_EQ(mem.classify(m.physical(3, m.tx_base() + 63), 4), AccessKind::ni);
  EXPECT_EQ(mem.classify(m.physical(3, m.rx_count_base() - 1), 4), AccessKind::ram);
}

TEST(Memory, ClockReadsAndReadOnlyOverlays) {
  MemorySystem mem;
  FakeBus bus;
  bus.now = 0x1234567890ull;
  EXPECT_EQ(mem.load(0, 1, bus, 0).value, 0x34567890u);
  EXPECT_EQ(mem.load(1, 1, bus, 0).value, 0x12u);
  EXPECT_EQ(mem.load(2, 2, bus, 0).value, 0x11111111u);
  EXPECT_EQ(mem.load(3, 3, bus, 0).value, 0x22222222u);

  for (Word slot : {0u, 1u, 2u, 3u}) {
    auto r = mem.store(slot, 0xDEAD, 1, bus, 0);
    EXPECT_EQ(r.kind, AccessKind::ignored);
    EXPECT_EQ(mem.ram(slot), 0u);
  }
  EXPECT_EQ(mem.load(2, 2, bus, 0).value, 0x11111111u);
}

TEST(Memory, BaseStoreLeavesRamUntouched) {
  MemorySystem mem;
  FakeBus bus;
  const AddressMap& m = mem.map();
  auto r = mem.store(m.protected_bit(), 0x12345, 2, bus, 0);
  EXPECT_EQ(r.kind, AccessKind::partition_base);
  EXPECT_EQ(r.physical, m.physical(2, 0));
  EXPECT_EQ(mem.ram(m.physical(2, 0)), 0u);
}

TEST(Memory, ReadYourWriteAndSharedVisibility) {
  MemorySystem mem;
  FakeBus bus;
  const AddressMap& m = mem.map();
  const Word addr = m.protected_bit() | 1000;
  mem.store(addr, 77, 3, bus, 0);
  EXPECT_EQ(mem.load(addr, 3, bus, 0).value, 77u);
  EXPECT_EQ(mem.load(addr, 1, bus, 0).value, 0u);  // same visible address, other segment
  mem.store(500, 9, 1, bus, 0);
  EXPECT_EQ(mem.load(500, 2, bus, 0).value, 9u);  // shared segment has no protection
}

TEST(Memory, NiWindowRoutesToBus) {
  MemorySystem mem;
  FakeBus bus;
  const AddressMap& m = mem.map();
  EXPECT_EQ(mem.load(m.protected_bit() | m.rx_data_base(), 1, bus, 0).value, 0xA000 + m.rx_data_base());
  mem.store(m.protected_bit() | (m.tx_base() + 5), 42, 1, bus, 0);
  ASSERT_EQ(bus.stores.size(), 1u);
  EXPECT_EQ(bus.stores[0], std::make_pair(m.tx_base() + 5, Word{42}));
  EXPECT_EQ(mem.store(m.protected_bit() | m.rx_data_base(), 1, 1, bus, 0).kind, AccessKind::ignored);
  EXPECT_EQ(bus.stores.size(), 1u);
}

TEST(Memory, TranslateWhileDeactivatedFaults) {
  MemorySystem mem;
  FakeBus bus;
  EXPECT_EQ(mem.load(7, 0, bus, 0).kind, AccessKind::fault);
  EXPECT_EQ(mem.store(7, 1, 0, bus, 0).kind, AccessKind::fault);
  EXPECT_EQ(mem.ram(7), 0u);
}

TEST(Stack, LifoWithMirror) {
  MemorySystem mem;
  StackState s;
  ASSERT_TRUE(mem.push_return(1, s, 5));
  EXPECT_EQ(mem.pop_return(1, s), Word{5});

  ASSERT_TRUE(mem.push_return(1, s, 5));
  EXPECT_EQ(s.top, 5u);
  ASSERT_TRUE(mem.push_return(1, s, 9));
  EXPECT_EQ(s.top, 9u);
  EXPECT_EQ(mem.pop_return(1, s), Word{9});
  EXPECT_EQ(s.top, 5u);
  EXPECT_EQ(mem.pop_return(1, s), Word{5});
  EXPECT_FALSE(mem.pop_return(1, s).has_value());
}

TEST(Stack, BoundedAndNeverTouchesBase) {
  MemorySystem mem({16, 8});
  StackState s;
  for (Word i = 0; i < 8; ++i) ASSERT_TRUE(mem.push_return(2, s, 100 + i));
  EXPECT_FALSE(mem.push_return(2, s, 1));
  EXPECT_EQ(s.depth, 8u);
  const AddressMap& m = mem.map();
  EXPECT_EQ(mem.ram(m.physical(2, 0)), 0u);
  for (Word i = 0; i < 8; ++i) EXPECT_EQ(mem.ram(m.physical(2, 1 + i)), 100 + i);
  EXPECT_EQ(mem.ram(m.physical(1, 1)), 0u);
}

TEST(Memory, DumpRestoreRoundTrip) {
  MemorySystem a;
  a.poke(3, 0xCAFEBABE);
  a.poke(0xFFFF, 1);
  std::stringstream ss;
  a.write_dump(ss);
  EXPECT_EQ(ss.str(), "0003 cafebabe\nffff 00000001\n");
  MemorySystem b;
  b.poke(4, 4);
  b.restore(ss);
  EXPECT_EQ(b.words(), a.words());

  std::istringstream bad("12 zz\n");
  EXPECT_THROW(b.restore(bad), std::runtime_error);
}
