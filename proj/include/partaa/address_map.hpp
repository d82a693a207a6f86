#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "partaa/isa.hpp"

namespace partaa {

// 2-bit active-partition code: 0 = deactivated, 1..3 = partitions 1..3.
using PartitionFlag = std::uint8_t;

inline constexpr unsigned kPartitionCount = 3;
inline constexpr unsigned kMaxChannels = 64;

/// Word-addressed physical memory of 2^n words split into four equal
/// segments by the top two bits. Segment 0 is shared; segments 1..3 belong
/// to partitions 1..3. Partitions see n-1 address bits, where bit n-2
/// picks protected (1) or shared (0).
///
/// Protected segment layout (offsets within the segment):
///   0                          partition base; stores set the partition flag
///   1 .. stack_depth           hardware return stack
///   stack_depth+1 ..           LD.K literal pool, then assembler data slots
///   seg-192 .. seg-129         NI reception counters, one per channel id
///   seg-128 .. seg-65          NI sampling buffers, one per channel id
///   seg-64  .. seg-1           NI transmit buffer, one address per channel id
///
/// Shared segment word slots 0..5: clock_L, clock_H, then one 32-bit flag
/// word per processor. Memory is word addressed, so each entry takes one
/// slot in that order.
struct AddressMap {
  unsigned address_bits = 16;
  unsigned stack_depth = 256;

  constexpr Word segment_words() const noexcept { return Word{1} << (address_bits - 2); }
  constexpr Word visible_limit() const noexcept { return Word{1} << (address_bits - 1); }
  constexpr Word protected_bit() const noexcept { return Word{1} << (address_bits - 2); }
  constexpr Word offset_mask() const noexcept { return segment_words() - 1; }

  constexpr Word literal_pool_base() const noexcept { return stack_depth + 1; }
  constexpr Word rx_count_base() const noexcept { return segment_words() - 3 * kMaxChannels; }
  constexpr Word rx_data_base() const noexcept { return segment_words() - 2 * kMaxChannels; }
  constexpr Word tx_base() const noexcept { return segment_words() - kMaxChannels; }

  static constexpr Word kClockLowSlot = 0;
  static constexpr Word kClockHighSlot = 1;
  static constexpr Word kFlagsSlot0 = 2;

  constexpr unsigned segment_of(Word physical) const noexcept {
    return static_cast<unsigned>(physical >> (address_bits - 2)) & 3u;
  }
  constexpr Word offset_of(Word physical) const noexcept { return physical & offset_mask(); }
  constexpr Word physical(unsigned segment, Word offset) const noexcept {
    return (Word{segment} << (address_bits - 2)) | (offset & offset_mask());
  }

  // Visible addresses an LD.P/ST.P or LD.S/ST.S with register value `reg` touches.
  constexpr Word protected_address(Word reg) const noexcept { return protected_bit() | (reg & offset_mask()); }
  constexpr Word shared_address(Word reg) const noexcept { return reg & offset_mask(); }

  std::string check() const {
    if (address_bits < 4 || address_bits > 28) return "address_bits must be in [4, 28]";
    if (stack_depth < 1) return "stack_depth must be at least 1";
    return {};
  }

  // The full layout (stack, pool and NI windows) only fits on larger memories.
  std::string check_layout() const {
    if (auto e = check(); !e.empty()) return e;
    if (literal_pool_base() >= rx_count_base()) {
      return "address_bits " + std::to_string(address_bits) + " leaves no room for the stack and NI windows";
    }
    return {};
  }
};

/// MCU address translation. Returns nullopt when no partition is active.
inline constexpr std::optional<Word> translate(const AddressMap& map, Word visible, PartitionFlag active) noexcept {
  if (active == 0 || active > 3) return std::nullopt;
  const unsigned n = map.address_bits;
  const Word low = visible & map.offset_mask();
  const bool protected_region = ((visible >> (n - 2)) & 1u) != 0;
  return protected_region ? ((Word{active} << (n - 2)) | low) : low;
}

}  // namespace partaa
