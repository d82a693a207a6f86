#pragma once

#include <array>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "partaa/isa.hpp"

namespace partaa {

enum class EventKind : std::uint8_t {
  reset,
  fetch,
  retire,
  switch_,
  mem_rd,
  mem_wr,
  flag_set,
  ignored_write,
  pkt_send,
  pkt_grant,
  pkt_recv,
  fault,
  halt,
};

inline constexpr std::string_view to_string(EventKind k) noexcept {
  constexpr std::array<std::string_view, 13> names{"reset",  "fetch",         "retire",   "switch",
                                                   "mem_rd", "mem_wr",        "flag_set", "ignored_write",
                                                   "pkt_send", "pkt_grant",   "pkt_recv", "fault",
                                                   "halt"};
  return names[static_cast<std::size_t>(k)];
}

enum class FaultReason : std::uint8_t {
  invalid_instruction,
  pc_out_of_range,
  stack_overflow,
  stack_underflow,
  translate_inactive,
  unconfigured_channel,
  tx_busy,
  rx_overwrite,
};

inline constexpr std::string_view to_string(FaultReason r) noexcept {
  constexpr std::array<std::string_view, 8> names{"invalid-instruction", "pc-out-of-range",
                                                  "stack-overflow",      "stack-underflow",
                                                  "translate-inactive",  "unconfigured-channel",
                                                  "tx-busy",             "overwrite-before-read"};
  return names[static_cast<std::size_t>(r)];
}

enum class ComponentType : std::uint8_t { system, processor, partition, ni, hub };

// Processors are numbered from 1 in traces; partitions 1..3; NIs from 0.
struct Component {
  ComponentType type = ComponentType::system;
  std::uint16_t processor = 0;
  std::uint8_t partition = 0;
  std::uint16_t ni = 0;

  static constexpr Component system() { return {}; }
  static constexpr Component hub() { return {ComponentType::hub}; }
  static constexpr Component proc(unsigned p) { return {ComponentType::processor, static_cast<std::uint16_t>(p)}; }
  static constexpr Component part(unsigned p, unsigned k) {
    return {ComponentType::partition, static_cast<std::uint16_t>(p), static_cast<std::uint8_t>(k)};
  }
  static constexpr Component network_interface(unsigned n) {
    return {ComponentType::ni, 0, 0, static_cast<std::uint16_t>(n)};
  }

  std::string str() const {
    switch (type) {
      case ComponentType::system: return "sys";
      case ComponentType::hub: return "hub";
      case ComponentType::processor: return "p" + std::to_string(processor);
      case ComponentType::partition: return "p" + std::to_string(processor) + "." + std::to_string(partition);
      case ComponentType::ni: return "ni" + std::to_string(ni);
    }
    return "?";
  }

  friend bool operator==(const Component&, const Component&) = default;
};

// Field meaning by kind:
//   fetch/retire     a = pc, b = word
//   switch           a = outgoing partition, b = incoming partition (0 = none)
//   mem_rd/mem_wr    a = physical address, b = value
//   flag_set         a = partition, b = 10-bit value
//   ignored_write    a = physical address, b = value
//   pkt_send         a = packet seq, b = payload, c = channel
//   pkt_grant        a = packet seq, b = hub arrival cycle, c = channel
//   pkt_recv         a = packet seq, b = payload, c = channel
//   fault            a = reason, b = pc/address/seq, c = word/channel
//   halt             a = pc
struct TraceEvent {
  Cycles cycle = 0;
  Component source;
  EventKind kind = EventKind::reset;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t c = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline std::string format_event(const TraceEvent& e) {
  std::ostringstream os;
  os << e.cycle << ' ' << e.source.str() << ' ' << to_string(e.kind);
  auto hex = [&](std::uint64_t v) { os << "0x" << std::hex << v << std::dec; };
  switch (e.kind) {
    case EventKind::reset: break;
    case EventKind::fetch:
    case EventKind::retire:
      os << " pc=" << e.a << " word=";
      hex(e.b);
      break;
    case EventKind::switch_: os << " from=" << e.a << " to=" << e.b; break;
    case EventKind::mem_rd:
    case EventKind::mem_wr:
    case EventKind::ignored_write:
      os << " addr=";
      hex(e.a);
      os << " value=";
      hex(e.b);
      break;
    case EventKind::flag_set:
      os << " partition=" << e.a << " value=";
      hex(e.b);
      break;
    case EventKind::pkt_send:
    case EventKind::pkt_recv:
      os << " seq=" << e.a << " payload=";
      hex(e.b);
      os << " channel=" << e.c;
      break;
    case EventKind::pkt_grant: os << " seq=" << e.a << " arrival=" << e.b << " channel=" << e.c; break;
    case EventKind::fault:
      os << " reason=" << to_string(static_cast<FaultReason>(e.a)) << " at=" << e.b << " info=";
      hex(e.c);
      break;
    case EventKind::halt: os << " pc=" << e.a; break;
  }
  return os.str();
}

/// Ordered event log. Pipeline-level events (fetch, retire, memory traffic)
/// can be switched off for long sweeps; everything else is always kept.
class Trace {
 public:
  explicit Trace(bool record_pipeline = true) : record_pipeline_(record_pipeline) {}

  bool records(EventKind kind) const noexcept {
    if (record_pipeline_) return true;
    return kind != EventKind::fetch && kind != EventKind::retire && kind != EventKind::mem_rd &&
           kind != EventKind::mem_wr;
  }

  void emit(const TraceEvent& e) {
    if (records(e.kind)) events_.push_back(e);
  }

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool record_pipeline() const noexcept { return record_pipeline_; }

  /// FNV-1a over the binary encoding of every event.
  std::uint64_t hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v, int bytes) {
      for (int i = 0; i < bytes; ++i) {
        h ^= (v >> (8 * i)) & 0xFFu;
        h *= 0x100000001b3ull;
      }
    };
    for (const auto& e : events_) {
      mix(e.cycle, 8);
      mix(static_cast<std::uint64_t>(e.source.type), 1);
      mix(e.source.processor, 2);
      mix(e.source.partition, 1);
      mix(e.source.ni, 2);
      mix(static_cast<std::uint64_t>(e.kind), 1);
      mix(e.a, 8);
      mix(e.b, 8);
      mix(e.c, 8);
    }
    return h;
  }

  void write(std::ostream& os) const {
    for (const auto& e : events_) os << format_event(e) << '\n';
  }

  std::vector<TraceEvent> of_kind(EventKind kind) const {
    std::vector<TraceEvent> out;
    for (const auto& e : events_) {
      if (e.kind == kind) out.push_back(e);
    }
    return out;
  }

 private:
  bool record_pipeline_;
  std::vector<TraceEvent> events_;
};

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace partaa
