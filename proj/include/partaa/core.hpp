#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partaa/address_map.hpp"
#include "partaa/isa.hpp"
#include "partaa/memory.hpp"
#include "partaa/trace.hpp"

namespace partaa {

struct Window {
  unsigned partition = 1;
  Cycles start = 0;
  Cycles duration = 0;

  constexpr Cycles end() const noexcept { return start + duration; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// SwCU table. Position in the table is (cycle + phase) mod period; cycles
/// outside every window are switch overhead or idle time with no partition
/// active. Consecutive windows of different partitions must leave at least
/// switch_overhead cycles between them (checked by validate_schedule).
struct PartitionSchedule {
  Cycles period = 1;
  Cycles phase = 0;
  std::vector<Window> windows;
  Cycles switch_overhead = 4;

  PartitionFlag active_at(Cycles cycle) const noexcept {
    const Cycles pos = (cycle + phase) % period;
    for (const auto& w : windows) {
      if (pos >= w.start && pos < w.end()) return static_cast<PartitionFlag>(w.partition);
    }
    return 0;
  }

  /// A schedule that keeps one partition active on every cycle.
  static PartitionSchedule always(unsigned partition, Cycles period = 1) {
    return {period, 0, {{partition, 0, period}}, 0};
  }
};

struct PipelineSlot {
  bool valid = false;
  bool out_of_range = false;
  Word pc = 0;
  Word word = 0;

  friend bool operator==(const PipelineSlot&, const PipelineSlot&) = default;
};

enum Stage : unsigned { kFetch = 0, kDecode = 1, kExecute = 2, kMemory = 3 };

/// Replicated per-partition state. Nothing here changes while the partition
/// is inactive.
struct PartitionContext {
  std::array<Word, kRegisterCount> registers{};
  Word pc = 0;
  bool halted = false;
  bool faulted = false;
  bool fetch_blocked = false;
  std::array<PipelineSlot, kPipelineDepth> latch{};
  StackState stack;
  Cycles active_cycles = 0;

  friend bool operator==(const PartitionContext&, const PartitionContext&) = default;
};

inline constexpr Word kPartitionFlagMask = 0x3FF;

inline constexpr unsigned partition_flag_shift(unsigned partition) noexcept { return 30 - 10 * partition; }

/// One processor: shared read-only instruction store, three partitions, the
/// SwCU and the MCU-fronted data memory.
///
/// Pipeline timing: an instruction fetched on active cycle t retires (and
/// takes effect) on active cycle t+3. Fetch happens before retirement within
/// a cycle, and a control instruction blocks fetch until it retires, so the
/// next fetch is on t+4. Inactive partitions are frozen in place.
class Processor {
 public:
  Processor(unsigned index, AddressMap map, PartitionSchedule schedule,
            const std::array<std::optional<BinaryImage>, kPartitionCount>& images)
      : index_(index), schedule_(std::move(schedule)), memory_(map) {
    for (unsigned p = 0; p < kPartitionCount; ++p) {
      code_base_[p] = static_cast<Word>(instructions_.size());
      if (!images[p]) {
        code_size_[p] = 0;
        contexts_[p].halted = true;
        continue;
      }
      const BinaryImage& img = *images[p];
      code_size_[p] = static_cast<Word>(img.words.size());
      instructions_.insert(instructions_.end(), img.words.begin(), img.words.end());
      contexts_[p].pc = img.entry_point;
      for (auto [addr, value] : img.data_init) {
        if (auto phys = memory_.translate(addr, static_cast<PartitionFlag>(p + 1))) memory_.poke(*phys, value);
      }
    }
  }

  unsigned index() const noexcept { return index_; }
  const PartitionSchedule& schedule() const noexcept { return schedule_; }
  MemorySystem& memory() noexcept { return memory_; }
  const MemorySystem& memory() const noexcept { return memory_; }
  const PartitionContext& context(unsigned partition) const { return contexts_.at(partition - 1); }
  PartitionFlag active_partition() const noexcept { return active_; }
  Word flag_word() const noexcept { return flags_; }

  bool all_halted() const noexcept {
    for (const auto& c : contexts_) {
      if (!c.halted) return false;
    }
    return true;
  }

  /// Only the low 10 bits of `value` reach the partition's field.
  Word set_partition_flag(unsigned partition, Word value) {
    if (partition < 1 || partition > kPartitionCount) throw std::out_of_range("partition id must be 1..3");
    const unsigned shift = partition_flag_shift(partition);
    flags_ = (flags_ & ~(kPartitionFlagMask << shift)) | ((value & kPartitionFlagMask) << shift);
    return flags_;
  }

  void step(Cycles cycle, PeripheralBus& bus, Trace& trace) {
    const PartitionFlag now = schedule_.active_at(cycle);
    if (now != active_) {
      trace.emit({cycle, Component::proc(index_ + 1), EventKind::switch_, active_, now});
      active_ = now;
      flags_ = (flags_ & 0x3FFFFFFFu) | (Word{now} << 30);
    }
    if (now == 0) return;
    PartitionContext& ctx = contexts_[now - 1];
    if (ctx.halted) return;
    ++ctx.active_cycles;
    const Component self = Component::part(index_ + 1, now);

    for (unsigned s = kMemory; s > kFetch; --s) ctx.latch[s] = ctx.latch[s - 1];
    ctx.latch[kFetch] = {};

    if (!ctx.fetch_blocked) {
      PipelineSlot slot{true, false, ctx.pc, 0};
      if (ctx.pc < code_size_[now - 1]) {
        slot.word = instructions_[code_base_[now - 1] + ctx.pc];
        trace.emit({cycle, self, EventKind::fetch, slot.pc, slot.word});
        auto in = try_decode(slot.word);
        if (!in || is_control(in->op)) ctx.fetch_blocked = true;
      } else {
        slot.out_of_range = true;
        ctx.fetch_blocked = true;
      }
      ++ctx.pc;
      ctx.latch[kFetch] = slot;
    }

    if (ctx.latch[kMemory].valid) retire(ctx, now, ctx.latch[kMemory], cycle, bus, trace);
  }

 private:
  void fault(PartitionContext& ctx, const Component& self, Cycles cycle, FaultReason reason, std::uint64_t at,
             std::uint64_t info, Trace& trace) {
    trace.emit({cycle, self, EventKind::fault, static_cast<std::uint64_t>(reason), at, info});
    ctx.halted = true;
    ctx.faulted = true;
  }

  void retire(PartitionContext& ctx, PartitionFlag part, const PipelineSlot& slot, Cycles cycle, PeripheralBus& bus,
              Trace& trace) {
    const Component self = Component::part(index_ + 1, part);
    if (slot.out_of_range) {
      fault(ctx, self, cycle, FaultReason::pc_out_of_range, slot.pc, 0, trace);
      return;
    }
    auto decoded = try_decode(slot.word);
    if (!decoded) {
      fault(ctx, self, cycle, FaultReason::invalid_instruction, slot.pc, slot.word, trace);
      return;
    }
    const Instruction in = *decoded;
    trace.emit({cycle, self, EventKind::retire, slot.pc, slot.word});

    auto& r = ctx.registers;
    const Word a = r[in.rs1];
    const Word b = r[in.rs2];
    const AddressMap& map = memory_.map();

    auto do_load = [&](Word visible) {
      AccessResult res = memory_.load(visible, part, bus, cycle);
      trace.emit({cycle, self, EventKind::mem_rd, res.physical, res.value});
      r[in.rd] = res.value;
    };
    auto do_store = [&](Word visible, Word value) {
      AccessResult res = memory_.store(visible, value, part, bus, cycle);
      switch (res.kind) {
        case AccessKind::partition_base:
          set_partition_flag(part, value);
          trace.emit({cycle, self, EventKind::flag_set, part, value & kPartitionFlagMask});
          break;
        case AccessKind::ignored: trace.emit({cycle, self, EventKind::ignored_write, res.physical, value}); break;
        default: trace.emit({cycle, self, EventKind::mem_wr, res.physical, value}); break;
      }
    };
    auto jump = [&](Word target) {
      ctx.pc = target;
      ctx.fetch_blocked = false;
    };

    switch (in.op) {
      case Opcode::NOP: break;
      case Opcode::ADD: r[in.rd] = a + b; break;
      case Opcode::SUB: r[in.rd] = a - b; break;
      case Opcode::AND: r[in.rd] = a & b; break;
      case Opcode::OR: r[in.rd] = a | b; break;
      case Opcode::XOR: r[in.rd] = a ^ b; break;
      case Opcode::SLL: r[in.rd] = a << (b & 31u); break;
      case Opcode::SRL: r[in.rd] = a >> (b & 31u); break;
      case Opcode::SLT: r[in.rd] = static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? 1 : 0; break;
      case Opcode::MUL: r[in.rd] = a * b; break;
      case Opcode::LD_P: do_load(map.protected_address(a)); break;
      case Opcode::LD_S: do_load(map.shared_address(a)); break;
      case Opcode::LD_K: do_load(map.protected_address(map.literal_pool_base() + slot.pc)); break;
      case Opcode::ST_P: do_store(map.protected_address(a), b); break;
      case Opcode::ST_S: do_store(map.shared_address(a), b); break;
      case Opcode::BEQ: jump(a == b ? r[in.rd] : slot.pc + 1); break;
      case Opcode::BLT:
        jump(static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? r[in.rd] : slot.pc + 1);
        break;
      case Opcode::JMPR: jump(a); break;
      case Opcode::CALL:
        if (!memory_.push_return(part, ctx.stack, slot.pc + 1)) {
          fault(ctx, self, cycle, FaultReason::stack_overflow, slot.pc, ctx.stack.depth, trace);
          return;
        }
        jump(a);
        break;
      case Opcode::RET: {
        auto target = memory_.pop_return(part, ctx.stack);
        if (!target) {
          fault(ctx, self, cycle, FaultReason::stack_underflow, slot.pc, 0, trace);
          return;
        }
        jump(*target);
        break;
      }
      case Opcode::HALT:
        ctx.halted = true;
        trace.emit({cycle, self, EventKind::halt, slot.pc});
        break;
    }
  }

  unsigned index_;
  PartitionSchedule schedule_;
  MemorySystem memory_;
  std::vector<Word> instructions_;
  std::array<Word, kPartitionCount> code_base_{};
  std::array<Word, kPartitionCount> code_size_{};
  std::array<PartitionContext, kPartitionCount> contexts_{};
  PartitionFlag active_ = 0;
  Word flags_ = 0;
};

}  // namespace partaa
