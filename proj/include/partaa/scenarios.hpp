#pragma once

#include <string>

#include "partaa/assembler.hpp"
#include "partaa/system.hpp"

namespace partaa {

inline constexpr unsigned kHandshakeChannel = 0;

/// Segment offset where the consumer logs every payload it reads.
inline constexpr Word handshake_log_offset(const AddressMap& map) noexcept { return map.rx_count_base() - 1024; }

/// Producer (alpha): waits for the consumer's flag to read x=1, sends the
/// next payload, raises its own flag to m=1, waits for y=2, clears, repeats.
inline std::string handshake_producer_source(unsigned iterations, const AddressMap& map) {
  const auto n = [](auto v) { return std::to_string(v); };
  return "; alpha: producer on processor 1, partition 1\n"
         ".data\n"
         ".word K " + n(iterations) + "\n"
         ".word ONE 1\n"
         ".word SHIFT 20              ; partition-1 field of a flag word\n"
         ".word MASK 0x3FF\n"
         ".word FLAGS_B " + n(AddressMap::kFlagsSlot0 + 1) + "          ; processor 2 flags\n"
         ".word TX " + n(map.tx_base() + kHandshakeChannel) + "\n"
         ".word X 1\n"
         ".word Y 2\n"
         ".text\n"
         "        LOADK r1, K\n"
         "        LOADK r2, ONE\n"
         "        LOADK r3, SHIFT\n"
         "        LOADK r4, MASK\n"
         "        LOADK r5, FLAGS_B\n"
         "        LOADK r6, TX\n"
         "        LOADK r8, X\n"
         "        LOADK r9, Y\n"
         "        LOADK r10, wait_x\n"
         "        LOADK r11, wait_y\n"
         "        LOADK r12, send\n"
         "        LOADK r13, acked\n"
         "        LOADK r14, done\n"
         "wait_x: LD.S r16, r5\n"
         "        SRL r16, r16, r3\n"
         "        AND r16, r16, r4\n"
         "        BEQ r16, r8, r12\n"
         "        JMPR r10\n"
         "send:   ADD r15, r15, r2\n"
         "        ST.P r6, r15            ; transmit payload\n"
         "        ST.P r7, r2             ; flag m (r7 = 0 is the partition base)\n"
         "wait_y: LD.S r16, r5\n"
         "        SRL r16, r16, r3\n"
         "        AND r16, r16, r4\n"
         "        BEQ r16, r9, r13\n"
         "        JMPR r11\n"
         "acked:  ST.P r7, r7             ; clear flag\n"
         "        SUB r1, r1, r2\n"
         "        BEQ r1, r7, r14\n"
         "        JMPR r10\n"
         "done:   HALT\n";
}

/// Consumer (beta): raises x=1, waits for m=1, polls the channel's reception
/// counter until a fresh packet is there, reads and logs it, raises y=2,
/// waits for the producer to clear, repeats.
inline std::string handshake_consumer_source(unsigned iterations, const AddressMap& map) {
  const auto n = [](auto v) { return std::to_string(v); };
  return "; beta: consumer on processor 2, partition 1\n"
         ".data\n"
         ".word K " + n(iterations) + "\n"
         ".word ONE 1\n"
         ".word SHIFT 20\n"
         ".word MASK 0x3FF\n"
         ".word FLAGS_A " + n(AddressMap::kFlagsSlot0) + "          ; processor 1 flags\n"
         ".word RXCNT " + n(map.rx_count_base() + kHandshakeChannel) + "\n"
         ".word RXDATA " + n(map.rx_data_base() + kHandshakeChannel) + "\n"
         ".word LOG " + n(handshake_log_offset(map)) + "\n"
         ".word X 1\n"
         ".word Y 2\n"
         ".text\n"
         "        LOADK r1, K\n"
         "        LOADK r2, ONE\n"
         "        LOADK r3, SHIFT\n"
         "        LOADK r4, MASK\n"
         "        LOADK r5, FLAGS_A\n"
         "        LOADK r6, RXDATA\n"
         "        LOADK r17, RXCNT\n"
         "        LOADK r18, LOG\n"
         "        LOADK r8, X\n"
         "        LOADK r9, Y\n"
         "        LOADK r10, loop\n"
         "        LOADK r11, wait_m\n"
         "        LOADK r12, got_m\n"
         "        LOADK r13, wait_data\n"
         "        LOADK r14, wait_clear\n"
         "        LOADK r20, next\n"
         "        LOADK r21, done\n"
         "loop:   ST.P r7, r8             ; flag x: ready\n"
         "wait_m: LD.S r16, r5\n"
         "        SRL r16, r16, r3\n"
         "        AND r16, r16, r4\n"
         "        BEQ r16, r2, r12\n"
         "        JMPR r11\n"
         "got_m:\n"
         "wait_data:\n"
         "        LD.P r19, r17           ; reception counter\n"
         "        BEQ r19, r22, r13       ; nothing new yet\n"
         "        ADD r22, r19, r7\n"
         "        LD.P r23, r6            ; read the sampling buffer\n"
         "        ST.P r18, r23\n"
         "        ADD r18, r18, r2\n"
         "        ST.P r7, r9             ; flag y: acknowledged\n"
         "wait_clear:\n"
         "        LD.S r16, r5\n"
         "        SRL r16, r16, r3\n"
         "        AND r16, r16, r4\n"
         "        BEQ r16, r7, r20\n"
         "        JMPR r14\n"
         "next:   SUB r1, r1, r2\n"
         "        BEQ r1, r7, r21\n"
         "        JMPR r10\n"
         "done:   HALT\n";
}

/// Four processors, three partitions each: p1 [0,200), p2 [204,250),
/// p3 [254,296) in a 300-cycle period.
inline PartitionSchedule default_schedule() { return {300, 0, {{1, 0, 200}, {2, 204, 46}, {3, 254, 42}}, 4}; }

inline NocConfig default_noc() {
  NocConfig noc;
  noc.channels = {{0, ni_of(1, 1), ni_of(2, 1), 2, 0}, {1, ni_of(2, 1), ni_of(1, 1), 2, 0}};
  noc.slot_table = SlotTable::spread(4, noc.channels, 8);
  return noc;
}

inline SystemConfig default_config() {
  SystemConfig cfg;
  cfg.processors.assign(4, ProcessorConfig{default_schedule(), {}});
  cfg.noc = default_noc();
  return cfg;
}

/// Producer on processor 1 partition 1, consumer on processor 2 partition 1,
/// one NoC channel between them. With `consumer_inactive_at_reception` the
/// producer only runs in [60,140) and the consumer only in [0,50) of a
/// 200-cycle period, so every packet lands while the consumer is frozen.
inline SystemConfig handshake_scenario(unsigned iterations = 100, bool consumer_inactive_at_reception = false) {
  SystemConfig cfg = default_config();
  AssemblerOptions opts{cfg.map};
  cfg.processors[0].images[0] = assemble(handshake_producer_source(iterations, cfg.map), opts);
  cfg.processors[1].images[0] = assemble(handshake_consumer_source(iterations, cfg.map), opts);
  if (consumer_inactive_at_reception) {
    cfg.processors[0].schedule = {200, 0, {{1, 60, 80}, {2, 144, 46}}, 4};
    cfg.processors[1].schedule = {200, 0, {{1, 0, 50}, {2, 54, 46}}, 4};
  }
  return cfg;
}

inline Cycles handshake_cycle_budget(unsigned iterations) { return 2000 + Cycles{iterations} * 1000; }

}  // namespace partaa
