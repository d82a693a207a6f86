#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "partaa/assembler.hpp"
#include "partaa/system.hpp"

// System configuration file (JSON):
//
// {
//   "address_bits": 16, "stack_depth": 256, "delta_so": 4,
//   "processors": [
//     { "period": 300, "phase": 0,
//       "partitions": [
//         { "id": 1, "source": "alpha.s",          // or "image": "alpha.bin"
//           "data": [[offset, value], ...],        // optional extra initial words
//           "windows": [[start, duration], ...] } ] } ],
//   "noc": { "t_slot": 8, "s_total": 4,
//            "slot_table": [0, 1, -1, -1],          // optional; spread evenly if absent
//            "channels": [ { "id": 0, "src": "1.1", "dst": "2.1", "slots": 1, "priority": 0 } ] }
// }
//
// Program paths are relative to the config file. "src"/"dst" name a
// network interface as processor.partition.

namespace partaa {

/// Unreadable or missing files (exit code 2 in the CLI).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size()))) {
    throw IoError("cannot write " + path.string());
  }
}

/// Loads a program: .s files are assembled, anything else is a binary image.
inline BinaryImage load_program(const std::filesystem::path& path, const AddressMap& map) {
  if (path.extension() == ".s" || path.extension() == ".asm") return assemble(read_file(path), {map});
  return deserialize_image(read_file(path, true));
}

namespace detail {

inline std::pair<unsigned, unsigned> parse_endpoint(const std::string& s) {
  const auto dot = s.find('.');
  try {
    if (dot == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const unsigned p = static_cast<unsigned>(std::stoul(s.substr(0, dot), &used));
    if (used != dot) throw std::invalid_argument(s);
    const unsigned k = static_cast<unsigned>(std::stoul(s.substr(dot + 1), &used));
    if (used != s.size() - dot - 1 || p < 1 || k < 1 || k > kPartitionCount) throw std::invalid_argument(s);
    return {p, k};
  } catch (const std::logic_error&) {
    throw ConfigError({"endpoint \"" + s + "\" must look like processor.partition, e.g. 2.1"});
  }
}

inline std::string endpoint_name(unsigned ni) {
  return std::to_string(ni / kPartitionCount + 1) + "." + std::to_string(ni % kPartitionCount + 1);
}

}  // namespace detail

inline SystemConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SystemConfig cfg;
  try {
    cfg.map.address_bits = j.value("address_bits", cfg.map.address_bits);
    cfg.map.stack_depth = j.value("stack_depth", cfg.map.stack_depth);
    cfg.delta_so = j.value("delta_so", cfg.delta_so);
    if (auto e = cfg.map.check(); !e.empty()) throw ConfigError({e});

    for (const auto& jp : j.at("processors")) {
      ProcessorConfig pc;
      pc.schedule.period = jp.at("period").get<Cycles>();
      pc.schedule.phase = jp.value("phase", Cycles{0});
      for (const auto& jk : jp.value("partitions", nlohmann::json::array())) {
        const unsigned id = jk.at("id").get<unsigned>();
        if (id < 1 || id > kPartitionCount) throw ConfigError({"partition id " + std::to_string(id) + " must be 1..3"});
        for (const auto& w : jk.value("windows", nlohmann::json::array())) {
          pc.schedule.windows.push_back({id, w.at(0).get<Cycles>(), w.at(1).get<Cycles>()});
        }
        std::optional<BinaryImage> img;
        if (jk.contains("source")) img = load_program(base_dir / jk["source"].get<std::string>(), cfg.map);
        if (jk.contains("image")) img = load_program(base_dir / jk["image"].get<std::string>(), cfg.map);
        if (jk.contains("data")) {
          if (!img) throw ConfigError({"partition " + std::to_string(id) + " has data but no program"});
          for (const auto& d : jk["data"]) img->data_init.emplace_back(d.at(0).get<Word>(), d.at(1).get<Word>());
          std::sort(img->data_init.begin(), img->data_init.end());
        }
        pc.images[id - 1] = std::move(img);
      }
      cfg.processors.push_back(std::move(pc));
    }

    const auto& jn = j.value("noc", nlohmann::json::object());
    const Cycles t_slot = jn.value("t_slot", Cycles{8});
    for (const auto& jc : jn.value("channels", nlohmann::json::array())) {
      const auto [sp, sk] = detail::parse_endpoint(jc.at("src").get<std::string>());
      const auto [dp, dk] = detail::parse_endpoint(jc.at("dst").get<std::string>());
      cfg.noc.channels.push_back({jc.at("id").get<std::uint32_t>(), ni_of(sp, sk), ni_of(dp, dk),
                                  jc.value("slots", 1u), jc.value("priority", 0)});
    }
    if (jn.contains("slot_table")) {
      cfg.noc.slot_table = {jn["slot_table"].get<std::vector<std::int32_t>>(), t_slot};
    } else {
      const std::uint32_t s_total = jn.value("s_total", 4u);
      cfg.noc.slot_table = SlotTable::spread(s_total, cfg.noc.channels, t_slot);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({std::string("malformed configuration: ") + e.what()});
  }
  return cfg;
}

inline SystemConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(j, path.parent_path());
}

/// JSON for `cfg`. `program_name(p, k)` gives the path recorded for the image
/// of processor p, partition k (both 1-based); the caller writes the files.
inline nlohmann::json config_to_json(const SystemConfig& cfg,
                                     const std::function<std::string(unsigned, unsigned)>& program_name) {
  nlohmann::json j;
  j["address_bits"] = cfg.map.address_bits;
  j["stack_depth"] = cfg.map.stack_depth;
  j["delta_so"] = cfg.delta_so;
  j["processors"] = nlohmann::json::array();
  for (std::size_t p = 0; p < cfg.processors.size(); ++p) {
    const auto& pc = cfg.processors[p];
    nlohmann::json jp{{"period", pc.schedule.period}, {"phase", pc.schedule.phase}};
    jp["partitions"] = nlohmann::json::array();
    for (unsigned k = 1; k <= kPartitionCount; ++k) {
      nlohmann::json jk{{"id", k}, {"windows", nlohmann::json::array()}};
      for (const auto& w : pc.schedule.windows) {
        if (w.partition == k) jk["windows"].push_back({w.start, w.duration});
      }
      if (pc.images[k - 1]) {
        const std::string name = program_name(static_cast<unsigned>(p + 1), k);
        jk[name.ends_with(".s") ? "source" : "image"] = name;
      }
      if (!jk["windows"].empty() || pc.images[k - 1]) jp["partitions"].push_back(jk);
    }
    j["processors"].push_back(jp);
  }
  nlohmann::json jn{{"t_slot", cfg.noc.slot_table.t_slot},
                    {"s_total", cfg.noc.slot_table.size()},
                    {"slot_table", cfg.noc.slot_table.owner},
                    {"channels", nlohmann::json::array()}};
  for (const auto& c : cfg.noc.channels) {
    jn["channels"].push_back({{"id", c.id},
                              {"src", detail::endpoint_name(c.src_ni)},
                              {"dst", detail::endpoint_name(c.dst_ni)},
                              {"slots", c.slots},
                              {"priority", c.base_priority}});
  }
  j["noc"] = jn;
  return j;
}

}  // namespace partaa
