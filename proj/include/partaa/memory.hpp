#pragma once

#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "partaa/address_map.hpp"
#include "partaa/isa.hpp"

namespace partaa {

/// Everything a processor's memory overlay can reach outside its own RAM.
class PeripheralBus {
 public:
  virtual ~PeripheralBus() = default;
  virtual Cycles clock() const = 0;
  virtual std::size_t processor_count() const = 0;
  // Broadcast (registered) copy of a processor's flag word.
  virtual Word processor_flags(std::size_t processor_index) const = 0;
  virtual Word ni_load(unsigned partition, Word offset, Cycles cycle) = 0;
  virtual void ni_store(unsigned partition, Word offset, Word value, Cycles cycle) = 0;
};

enum class AccessKind : std::uint8_t {
  ram,
  clock,
  processor_flags,
  partition_base,  // store sets the partition flag; loads read RAM
  ni,
  ignored,         // store to a read-only overlay
  fault,           // translate while deactivated
};

struct AccessResult {
  AccessKind kind = AccessKind::ram;
  Word physical = 0;
  Word value = 0;
};

// Per-partition hardware stack registers (kept in the partition context).
struct StackState {
  Word depth = 0;
  Word top = 0;  // mirror of the most recent return address

  friend bool operator==(const StackState&, const StackState&) = default;
};

/// Dual-port data memory of one processor plus the MCU and peripheral
/// overlay. Overlay entries take precedence over RAM for loads and stores.
class MemorySystem {
 public:
  explicit MemorySystem(AddressMap map = {}) : map_(map), words_(std::size_t{1} << map.address_bits, 0) {}

  const AddressMap& map() const noexcept { return map_; }
  Word ram(Word physical) const { return words_.at(physical); }
  void poke(Word physical, Word value) { words_.at(physical) = value; }
  const std::vector<Word>& words() const noexcept { return words_; }

  std::optional<Word> translate(Word visible, PartitionFlag active) const noexcept {
    return partaa::translate(map_, visible, active);
  }

  AccessKind classify(Word physical, std::size_t processors) const noexcept {
    const unsigned seg = map_.segment_of(physical);
    const Word off = map_.offset_of(physical);
    if (seg == 0) {
      if (off <= AddressMap::kClockHighSlot) return AccessKind::clock;
      if (off < AddressMap::kFlagsSlot0 + processors) return AccessKind::processor_flags;
      return AccessKind::ram;
    }
    if (off == 0) return AccessKind::partition_base;
    if (map_.literal_pool_base() < map_.rx_count_base() && off >= map_.rx_count_base()) return AccessKind::ni;
    return AccessKind::ram;
  }

  AccessResult load(Word visible, PartitionFlag active, PeripheralBus& bus, Cycles cycle) {
    auto phys = translate(visible, active);
    if (!phys) return {AccessKind::fault, visible, 0};
    AccessResult r{classify(*phys, bus.processor_count()), *phys, 0};
    const Word off = map_.offset_of(*phys);
    switch (r.kind) {
      case AccessKind::clock:
        r.value = off == AddressMap::kClockLowSlot ? static_cast<Word>(bus.clock())
                                                   : static_cast<Word>(bus.clock() >> 32);
        break;
      case AccessKind::processor_flags: r.value = bus.processor_flags(off - AddressMap::kFlagsSlot0); break;
      case AccessKind::ni: r.value = bus.ni_load(map_.segment_of(*phys), off, cycle); break;
      default: r.value = words_[*phys]; break;
    }
    return r;
  }

  /// For partition_base the caller applies the flag update; RAM is untouched.
  AccessResult store(Word visible, Word value, PartitionFlag active, PeripheralBus& bus, Cycles cycle) {
    auto phys = translate(visible, active);
    if (!phys) return {AccessKind::fault, visible, value};
    AccessResult r{classify(*phys, bus.processor_count()), *phys, value};
    switch (r.kind) {
      case AccessKind::clock:
      case AccessKind::processor_flags: r.kind = AccessKind::ignored; break;
      case AccessKind::partition_base: break;
      case AccessKind::ni:
        if (map_.offset_of(*phys) < map_.tx_base()) {
          r.kind = AccessKind::ignored;
        } else {
          bus.ni_store(map_.segment_of(*phys), map_.offset_of(*phys), value, cycle);
        }
        break;
      default: words_[*phys] = value; break;
    }
    return r;
  }

  // Stack slots are protected offsets 1..stack_depth of the partition's own
  // segment, reached through the second port (no overlay, no bus).
  bool push_return(unsigned partition, StackState& stack, Word return_pc) {
    if (stack.depth >= map_.stack_depth) return false;
    words_[map_.physical(partition, 1 + stack.depth)] = return_pc;
    ++stack.depth;
    stack.top = return_pc;
    return true;
  }

  std::optional<Word> pop_return(unsigned partition, StackState& stack) {
    if (stack.depth == 0) return std::nullopt;
    --stack.depth;
    Word value = words_[map_.physical(partition, 1 + stack.depth)];
    stack.top = stack.depth == 0 ? 0 : words_[map_.physical(partition, stack.depth)];
    return value;
  }

  /// Text dump: one "physical value" hex pair per non-zero word.
  void write_dump(std::ostream& os) const {
    const int width = static_cast<int>((map_.address_bits + 3) / 4);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] == 0) continue;
      os << std::hex << std::setfill('0') << std::setw(width) << i << ' ' << std::setw(8) << words_[i]
         << std::dec << '\n';
    }
  }

  void restore(std::istream& is) {
    std::fill(words_.begin(), words_.end(), 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::uint64_t addr = 0, value = 0;
      if (!(ls >> std::hex >> addr >> value) || addr >= words_.size() || value > 0xFFFFFFFFull) {
        throw std::runtime_error("memory dump line " + std::to_string(line_no) + " is malformed");
      }
      words_[addr] = static_cast<Word>(value);
    }
  }

 private:
  AddressMap map_;
  std::vector<Word> words_;
};

}  // namespace partaa
