#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partaa/address_map.hpp"
#include "partaa/isa.hpp"
#include "partaa/trace.hpp"

namespace partaa {

/// Fixed propagation from a producer's store to hub ingress, and from hub
/// delivery to the consumer's sampling buffer.
inline constexpr Cycles kEdgeLatency = 8;

struct Packet {
  Word payload = 0;
  std::uint32_t src_ni = 0;
  std::uint32_t dst_ni = 0;
  std::uint32_t channel = 0;
  std::uint64_t seq = 0;
};

struct ChannelConfig {
  std::uint32_t id = 0;
  std::uint32_t src_ni = 0;
  std::uint32_t dst_ni = 0;
  std::uint32_t slots = 1;
  std::int32_t base_priority = 0;
};

/// TDM table: owner channel id per slot, or -1 for a free slot.
struct SlotTable {
  std::vector<std::int32_t> owner;
  Cycles t_slot = 8;

  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(owner.size()); }

  std::uint32_t owned_by(std::uint32_t channel) const noexcept {
    return static_cast<std::uint32_t>(std::count(owner.begin(), owner.end(), static_cast<std::int32_t>(channel)));
  }

  /// Longest cyclic run of slots not owned by `channel`.
  std::uint32_t max_gap(std::uint32_t channel) const {
    const std::uint32_t n = size();
    std::uint32_t best = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (owner[i] != static_cast<std::int32_t>(channel)) continue;
      std::uint32_t run = 0;
      for (std::uint32_t j = 1; j < n && owner[(i + j) % n] != static_cast<std::int32_t>(channel); ++j) ++run;
      best = std::max(best, run);
    }
    return best;
  }

  /// Spreads each channel's slots as evenly as the table allows, largest
  /// allocations first. Unassigned slots stay free.
  static SlotTable spread(std::uint32_t total, const std::vector<ChannelConfig>& channels, Cycles t_slot) {
    SlotTable table{std::vector<std::int32_t>(total, -1), t_slot};
    std::vector<const ChannelConfig*> order;
    for (const auto& c : channels) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->slots > b->slots; });
    for (const auto* c : order) {
      std::uint32_t start = 0;
      while (start < total && table.owner[start] != -1) ++start;
      for (std::uint32_t i = 0; i < c->slots; ++i) {
        std::uint32_t pos = (start + static_cast<std::uint32_t>(std::uint64_t{i} * total / c->slots)) % total;
        for (std::uint32_t probe = 0; probe < total && table.owner[pos] != -1; ++probe) pos = (pos + 1) % total;
        if (table.owner[pos] == -1) table.owner[pos] = static_cast<std::int32_t>(c->id);
      }
    }
    return table;
  }
};

/// Hub+router+NI topology. NI id = processor index * nis_per_router + (partition - 1).
struct NocConfig {
  unsigned routers = 4;
  unsigned nis_per_router = 3;
  std::vector<ChannelConfig> channels;
  SlotTable slot_table{{-1, -1, -1, -1}, 8};

  unsigned ni_count() const noexcept { return routers * nis_per_router; }
};

inline std::vector<std::string> check_noc(const NocConfig& cfg) {
  std::vector<std::string> problems;
  const auto& table = cfg.slot_table;
  if (table.size() == 0) problems.emplace_back("slot table is empty");
  if (table.t_slot == 0) problems.emplace_back("t_slot must be at least 1");
  std::map<std::uint32_t, int> ids;
  std::uint64_t assigned = 0;
  for (const auto& c : cfg.channels) {
    const std::string name = "channel " + std::to_string(c.id);
    if (c.id >= kMaxChannels) problems.push_back(name + ": id must be below " + std::to_string(kMaxChannels));
    if (++ids[c.id] == 2) problems.push_back(name + ": duplicate id");
    if (c.src_ni >= cfg.ni_count()) problems.push_back(name + ": source NI " + std::to_string(c.src_ni) + " does not exist");
    if (c.dst_ni >= cfg.ni_count()) problems.push_back(name + ": destination NI " + std::to_string(c.dst_ni) + " does not exist");
    if (c.slots < 1) problems.push_back(name + ": needs at least one slot");
    assigned += c.slots;
    if (table.size() > 0 && c.slots >= 1) {
      if (table.owned_by(c.id) != c.slots) {
        problems.push_back(name + ": owns " + std::to_string(table.owned_by(c.id)) + " slots, configured " +
                           std::to_string(c.slots));
      } else if (table.max_gap(c.id) > (table.size() - 1) / c.slots) {
        problems.push_back(name + ": slots are not evenly spaced (gap " + std::to_string(table.max_gap(c.id)) +
                           " exceeds " + std::to_string((table.size() - 1) / c.slots) + ")");
      }
    }
  }
  if (assigned > table.size()) {
    problems.push_back("slots assigned (" + std::to_string(assigned) + ") exceed S_total (" +
                       std::to_string(table.size()) + ")");
  }
  for (auto owner : table.owner) {
    if (owner >= 0 && ids.find(static_cast<std::uint32_t>(owner)) == ids.end()) {
      problems.push_back("slot table references unknown channel " + std::to_string(owner));
      break;
    }
  }
  return problems;
}

struct InFlight {
  Packet packet;
  Cycles send = 0;
  Cycles hub_arrival = 0;
};

/// Central hub arbiter. The decision for slot k is taken at the boundary that
/// closes it, cycle (k+1)*t_slot, among packets that reached hub ingress at
/// least two cycles earlier (one ingress sampling cycle). The slot owner wins
/// whenever it has such a packet. Otherwise the slot is reclaimed by the
/// candidate with the highest base_priority + slots waited; ties go to the
/// first channel at or after the rotating token. The packet leaves the hub
/// at the decision cycle, so its hub latency is decision - arrival.
class Hub {
 public:
  Hub(std::vector<ChannelConfig> channels, SlotTable table)
      : channels_(std::move(channels)), table_(std::move(table)), queues_(channels_.size()),
        waited_(channels_.size(), 0) {
    for (std::size_t i = 0; i < channels_.size(); ++i) index_[channels_[i].id] = i;
  }

  void accept(const InFlight& f) { queues_.at(index_.at(f.packet.channel)).push_back(f); }

  std::size_t pending(std::uint32_t channel) const { return queues_.at(index_.at(channel)).size(); }
  std::uint64_t waited(std::uint32_t channel) const { return waited_.at(index_.at(channel)); }
  std::size_t token() const noexcept { return token_; }
  const SlotTable& table() const noexcept { return table_; }

  // Test hook: hand owned slots to other channels first.
  void set_broken_arbitration(bool broken) noexcept { broken_ = broken; }

  /// Runs the decision if `cycle` closes a slot; returns the granted packet.
  std::optional<InFlight> step(Cycles cycle) {
    if (cycle == 0 || table_.size() == 0 || cycle % table_.t_slot != 0) return std::nullopt;
    const std::uint32_t slot = static_cast<std::uint32_t>((cycle / table_.t_slot - 1) % table_.size());
    const std::int32_t owner = table_.owner[slot];
    const std::size_t n = channels_.size();

    std::vector<bool> candidate(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      candidate[i] = !queues_[i].empty() && queues_[i].front().hub_arrival + 2 <= cycle;
    }

    std::optional<std::size_t> winner;
    if (owner >= 0) {
      const std::size_t oi = index_.at(static_cast<std::uint32_t>(owner));
      if (candidate[oi] && !broken_) winner = oi;
      if (broken_) {
        for (std::size_t i = 0; i < n && !winner; ++i) {
          if (candidate[i] && i != oi) winner = i;
        }
        if (!winner && candidate[oi]) winner = oi;
      }
    }
    if (!winner) {
      std::int64_t best = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (token_ + k) % n;
        if (!candidate[i]) continue;
        const std::int64_t prio = channels_[i].base_priority + static_cast<std::int64_t>(waited_[i]);
        if (!winner || prio > best) {
          winner = i;
          best = prio;
        }
      }
    }
    if (n > 0) token_ = (token_ + 1) % n;
    if (!winner) return std::nullopt;

    for (std::size_t i = 0; i < n; ++i) {
      if (candidate[i] && i != *winner) ++waited_[i];
    }
    waited_[*winner] = 0;
    InFlight granted = queues_[*winner].front();
    queues_[*winner].pop_front();
    return granted;
  }

 private:
  std::vector<ChannelConfig> channels_;
  SlotTable table_;
  std::map<std::uint32_t, std::size_t> index_;
  std::vector<std::deque<InFlight>> queues_;
  std::vector<std::uint64_t> waited_;
  std::size_t token_ = 0;
  bool broken_ = false;
};

struct RxBuffer {
  bool configured = false;
  Word payload = 0;
  std::uint32_t received = 0;
  std::uint32_t consumed = 0;

  friend bool operator==(const RxBuffer&, const RxBuffer&) = default;
};

struct NetworkInterface {
  std::optional<Packet> tx;
  Cycles tx_written = 0;
  std::array<RxBuffer, kMaxChannels> rx{};
};

struct Delivery {
  std::uint64_t seq = 0;
  std::uint32_t channel = 0;
  Cycles send = 0;
  Cycles hub_arrival = 0;
  Cycles hub_grant = 0;
  Cycles recv = 0;

  Cycles hub_latency() const noexcept { return hub_grant - hub_arrival; }
  Cycles end_to_end() const noexcept { return recv - send; }
};

struct NiReadResult {
  Word payload = 0;
  bool fresh = false;
};

/// The whole network: NIs, the two fixed-latency router edges, and the hub.
/// Per-cycle order: NI transmit buffers forward, uplink arrivals enter the
/// hub, the hub arbitrates, downlink arrivals land in sampling buffers.
class Noc {
 public:
  explicit Noc(NocConfig cfg)
      : cfg_(std::move(cfg)), hub_(cfg_.channels, cfg_.slot_table), nis_(cfg_.ni_count()) {
    for (const auto& c : cfg_.channels) {
      channel_index_[c.id] = &c - cfg_.channels.data();
      if (c.dst_ni < nis_.size() && c.id < kMaxChannels) nis_[c.dst_ni].rx[c.id].configured = true;
    }
  }

  const NocConfig& config() const noexcept { return cfg_; }
  Hub& hub() noexcept { return hub_; }
  const NetworkInterface& ni(unsigned id) const { return nis_.at(id); }
  const std::vector<Delivery>& deliveries() const noexcept { return deliveries_; }
  bool tx_free(unsigned ni) const { return !nis_.at(ni).tx.has_value(); }
  std::size_t in_flight(std::uint32_t channel) const {
    auto it = outstanding_.find(channel);
    return it == outstanding_.end() ? 0 : it->second;
  }

  const ChannelConfig* channel(std::uint32_t id) const {
    auto it = channel_index_.find(id);
    return it == channel_index_.end() ? nullptr : &cfg_.channels[it->second];
  }

  /// Store into the NI transmit buffer. The buffer holds the packet through
  /// the next cycle and frees when it forwards to the router.
  bool ni_send(unsigned ni, std::uint32_t channel_id, Word payload, Cycles cycle, Trace& trace) {
    const Component self = Component::network_interface(ni);
    const ChannelConfig* ch = channel(channel_id);
    if (ch == nullptr || ch->src_ni != ni) {
      trace.emit({cycle, self, EventKind::fault, static_cast<std::uint64_t>(FaultReason::unconfigured_channel),
                  channel_id, payload});
      return false;
    }
    NetworkInterface& n = nis_.at(ni);
    if (n.tx) {
      trace.emit({cycle, self, EventKind::fault, static_cast<std::uint64_t>(FaultReason::tx_busy), channel_id, payload});
      return false;
    }
    n.tx = Packet{payload, ni, ch->dst_ni, channel_id, next_seq_++};
    n.tx_written = cycle;
    ++outstanding_[channel_id];
    trace.emit({cycle, self, EventKind::pkt_send, n.tx->seq, payload, channel_id});
    return true;
  }

  /// Non-destructive read; the packet counts as consumed afterwards.
  std::optional<NiReadResult> ni_read(unsigned ni, std::uint32_t channel_id, Cycles cycle, Trace& trace) {
    if (channel_id >= kMaxChannels || !nis_.at(ni).rx[channel_id].configured) {
      trace.emit({cycle, Component::network_interface(ni), EventKind::fault,
                  static_cast<std::uint64_t>(FaultReason::unconfigured_channel), channel_id, 0});
      return std::nullopt;
    }
    RxBuffer& b = nis_[ni].rx[channel_id];
    NiReadResult r{b.payload, b.received != b.consumed};
    b.consumed = b.received;
    return r;
  }

  std::optional<std::uint32_t> rx_count(unsigned ni, std::uint32_t channel_id, Cycles cycle, Trace& trace) {
    if (channel_id >= kMaxChannels || !nis_.at(ni).rx[channel_id].configured) {
      trace.emit({cycle, Component::network_interface(ni), EventKind::fault,
                  static_cast<std::uint64_t>(FaultReason::unconfigured_channel), channel_id, 0});
      return std::nullopt;
    }
    return nis_[ni].rx[channel_id].received;
  }

  void step(Cycles cycle, Trace& trace) {
    for (auto& n : nis_) {
      if (n.tx && cycle >= n.tx_written + 1) {
        uplink_.push_back({*n.tx, n.tx_written, n.tx_written + kEdgeLatency});
        n.tx.reset();
      }
    }
    while (!uplink_.empty() && uplink_.front().hub_arrival <= cycle) {
      hub_.accept(uplink_.front());
      uplink_.pop_front();
    }
    if (auto granted = hub_.step(cycle)) {
      trace.emit({cycle, Component::hub(), EventKind::pkt_grant, granted->packet.seq, granted->hub_arrival,
                  granted->packet.channel});
      downlink_.push_back({*granted, cycle});
    }
    while (!downlink_.empty() && downlink_.front().grant + kEdgeLatency <= cycle) {
      const auto [f, grant] = downlink_.front();
      downlink_.pop_front();
      const Packet& p = f.packet;
      RxBuffer& b = nis_.at(p.dst_ni).rx[p.channel];
      const Component dst = Component::network_interface(p.dst_ni);
      if (b.received != b.consumed) {
        trace.emit({cycle, dst, EventKind::fault, static_cast<std::uint64_t>(FaultReason::rx_overwrite), p.seq,
                    p.channel});
      }
      b.payload = p.payload;
      ++b.received;
      --outstanding_[p.channel];
      trace.emit({cycle, dst, EventKind::pkt_recv, p.seq, p.payload, p.channel});
      deliveries_.push_back({p.seq, p.channel, f.send, f.hub_arrival, grant, cycle});
    }
  }

 private:
  struct Downlink {
    InFlight flight;
    Cycles grant;
  };

  NocConfig cfg_;
  Hub hub_;
  std::vector<NetworkInterface> nis_;
  std::map<std::uint32_t, std::size_t> channel_index_;
  std::deque<InFlight> uplink_;
  std::deque<Downlink> downlink_;
  std::vector<Delivery> deliveries_;
  std::map<std::uint32_t, std::size_t> outstanding_;
  std::uint64_t next_seq_ = 0;
};

/// Send-to-receive delay of packet `seq`, or nullopt if it never arrived.
inline std::optional<Cycles> end_to_end_delay(const Trace& trace, std::uint64_t seq) {
  std::optional<Cycles> sent;
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::pkt_send && e.a == seq) sent = e.cycle;
    if (e.kind == EventKind::pkt_recv && e.a == seq && sent) return e.cycle - *sent;
  }
  return std::nullopt;
}

}  // namespace partaa
