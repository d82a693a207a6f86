#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "partaa/address_map.hpp"
#include "partaa/analysis.hpp"
#include "partaa/core.hpp"
#include "partaa/isa.hpp"
#include "partaa/memory.hpp"
#include "partaa/noc.hpp"
#include "partaa/trace.hpp"

namespace partaa {

struct ProcessorConfig {
  PartitionSchedule schedule;
  std::array<std::optional<BinaryImage>, kPartitionCount> images;
};

struct SystemConfig {
  AddressMap map;
  Cycles delta_so = 4;
  std::vector<ProcessorConfig> processors;
  // routers is taken from the processor count: one router per processor.
  NocConfig noc;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

inline NocConfig effective_noc(const SystemConfig& cfg) {
  NocConfig noc = cfg.noc;
  noc.routers = static_cast<unsigned>(cfg.processors.size());
  noc.nis_per_router = kPartitionCount;
  return noc;
}

/// Every violated constraint, not just the first.
inline std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> problems;
  if (auto e = cfg.map.check_layout(); !e.empty()) problems.push_back(e);
  if (cfg.processors.empty()) problems.emplace_back("at least one processor is required");
  for (std::size_t p = 0; p < cfg.processors.size(); ++p) {
    const std::string proc = "processor " + std::to_string(p + 1);
    PartitionSchedule s = cfg.processors[p].schedule;
    s.switch_overhead = cfg.delta_so;
    for (const auto& v : validate_schedule(s).violations) {
      problems.push_back(proc + " schedule " + std::string(to_string(v.rule)) + ": " + v.message);
    }
    for (unsigned k = 0; k < kPartitionCount; ++k) {
      const auto& img = cfg.processors[p].images[k];
      if (!img) continue;
      const std::string part = proc + " partition " + std::to_string(k + 1);
      for (const auto& e : check_image(*img, cfg.map.address_bits)) problems.push_back(part + ": " + e);
      if (cfg.map.check_layout().empty() &&
          cfg.map.literal_pool_base() + img->words.size() > cfg.map.rx_count_base()) {
        problems.push_back(part + ": literal pool would overlap the NI window");
      }
    }
  }
  for (const auto& e : check_noc(effective_noc(cfg))) problems.push_back("noc: " + e);
  return problems;
}

/// The whole platform. Per-cycle order: processors by id, then the NoC (NI
/// transmit, uplinks, hub, downlinks), then the flag broadcast register is
/// latched and the global clock advances. Flags written on cycle c are
/// visible to every processor from cycle c+1.
class System {
 public:
  explicit System(SystemConfig cfg, bool record_pipeline = true)
      : cfg_(std::move(cfg)), noc_(checked_noc(cfg_)), trace_(record_pipeline) {
    for (std::size_t p = 0; p < cfg_.processors.size(); ++p) {
      PartitionSchedule s = cfg_.processors[p].schedule;
      s.switch_overhead = cfg_.delta_so;
      processors_.emplace_back(static_cast<unsigned>(p), cfg_.map, s, cfg_.processors[p].images);
    }
    broadcast_.assign(processors_.size(), 0);
    trace_.emit({0, Component::system(), EventKind::reset});
  }

  const SystemConfig& config() const noexcept { return cfg_; }
  std::size_t processor_count() const noexcept { return processors_.size(); }
  std::size_t partition_count() const noexcept { return processors_.size() * kPartitionCount; }
  Processor& processor(std::size_t id) { return processors_.at(id - 1); }
  const Processor& processor(std::size_t id) const { return processors_.at(id - 1); }
  Noc& noc() noexcept { return noc_; }
  const Noc& noc() const noexcept { return noc_; }
  const Trace& trace() const noexcept { return trace_; }
  Cycles cycle() const noexcept { return cycle_; }

  /// Current composed flag word of processor `id` (1-based).
  Word read_processor_flags(std::size_t id) const { return processors_.at(id - 1).flag_word(); }

  bool all_halted() const noexcept {
    for (const auto& p : processors_) {
      if (!p.all_halted()) return false;
    }
    return true;
  }

  void step() {
    for (auto& p : processors_) {
      Bus bus{*this, p.index()};
      p.step(cycle_, bus, trace_);
    }
    noc_.step(cycle_, trace_);
    for (std::size_t p = 0; p < processors_.size(); ++p) broadcast_[p] = processors_[p].flag_word();
    ++cycle_;
  }

  /// Runs until the clock reaches `max_cycles` or every partition halted.
  const Trace& run(Cycles max_cycles) {
    while (cycle_ < max_cycles && !all_halted()) step();
    return trace_;
  }

  void write_dump(std::ostream& os) const {
    for (const auto& p : processors_) {
      os << "# processor " << p.index() + 1 << '\n';
      p.memory().write_dump(os);
    }
  }

 private:
  static NocConfig checked_noc(const SystemConfig& cfg) {
    if (auto problems = validate_config(cfg); !problems.empty()) throw ConfigError(std::move(problems));
    return effective_noc(cfg);
  }

  class Bus final : public PeripheralBus {
   public:
    Bus(System& sys, unsigned processor) : sys_(sys), processor_(processor) {}
    Cycles clock() const override { return sys_.cycle_; }
    std::size_t processor_count() const override { return sys_.processors_.size(); }
    Word processor_flags(std::size_t index) const override { return sys_.broadcast_.at(index); }

    Word ni_load(unsigned partition, Word offset, Cycles cycle) override {
      const AddressMap& map = sys_.cfg_.map;
      const unsigned ni = processor_ * kPartitionCount + partition - 1;
      if (offset >= map.tx_base()) return 0;
      if (offset >= map.rx_data_base()) {
        auto r = sys_.noc_.ni_read(ni, offset - map.rx_data_base(), cycle, sys_.trace_);
        return r ? r->payload : 0;
      }
      return sys_.noc_.rx_count(ni, offset - map.rx_count_base(), cycle, sys_.trace_).value_or(0);
    }

    void ni_store(unsigned partition, Word offset, Word value, Cycles cycle) override {
      const unsigned ni = processor_ * kPartitionCount + partition - 1;
      sys_.noc_.ni_send(ni, offset - sys_.cfg_.map.tx_base(), value, cycle, sys_.trace_);
    }

   private:
    System& sys_;
    unsigned processor_;
  };

  SystemConfig cfg_;
  std::vector<Processor> processors_;
  Noc noc_;
  Trace trace_;
  std::vector<Word> broadcast_;
  Cycles cycle_ = 0;
};

inline unsigned ni_of(unsigned processor, unsigned partition) noexcept {
  return (processor - 1) * kPartitionCount + (partition - 1);
}

}  // namespace partaa
