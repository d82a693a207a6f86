#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace partaa {

using Word = std::uint32_t;
using Cycles = std::uint64_t;

inline constexpr unsigned kRegisterCount = 32;

// Register-register ISA. There are no immediate operands anywhere; constants
// come from pre-initialised data memory through LD.K (PC-indexed literal pool).
enum class Opcode : std::uint8_t {
  NOP = 0x00,
  ADD = 0x01,
  SUB = 0x02,
  AND = 0x03,
  OR = 0x04,
  XOR = 0x05,
  SLL = 0x06,
  SRL = 0x07,
  SLT = 0x08,
  MUL = 0x09,
  LD_P = 0x10,
  ST_P = 0x11,
  LD_S = 0x12,
  ST_S = 0x13,
  LD_K = 0x14,
  BEQ = 0x20,
  BLT = 0x21,
  JMPR = 0x22,
  CALL = 0x23,
  RET = 0x24,
  HALT = 0x3F,
};

// Which register fields an opcode uses; the rest must be zero in a valid word.
enum class OperandFormat {
  None,    // NOP, RET, HALT
  Alu,     // rd, rs1, rs2
  Load,    // rd, rs1 (address)
  Store,   // rs1 (address), rs2 (value)
  Const,   // rd
  Branch,  // rs1, rs2, rd (target)
  Jump,    // rs1 (target)
};

struct OpcodeInfo {
  Opcode op;
  std::string_view mnemonic;
  OperandFormat format;
};

inline constexpr std::array<OpcodeInfo, 21> kOpcodes{{
    {Opcode::NOP, "NOP", OperandFormat::None},
    {Opcode::ADD, "ADD", OperandFormat::Alu},
    {Opcode::SUB, "SUB", OperandFormat::Alu},
    {Opcode::AND, "AND", OperandFormat::Alu},
    {Opcode::OR, "OR", OperandFormat::Alu},
    {Opcode::XOR, "XOR", OperandFormat::Alu},
    {Opcode::SLL, "SLL", OperandFormat::Alu},
    {Opcode::SRL, "SRL", OperandFormat::Alu},
    {Opcode::SLT, "SLT", OperandFormat::Alu},
    {Opcode::MUL, "MUL", OperandFormat::Alu},
    {Opcode::LD_P, "LD.P", OperandFormat::Load},
    {Opcode::ST_P, "ST.P", OperandFormat::Store},
    {Opcode::LD_S, "LD.S", OperandFormat::Load},
    {Opcode::ST_S, "ST.S", OperandFormat::Store},
    {Opcode::LD_K, "LD.K", OperandFormat::Const},
    {Opcode::BEQ, "BEQ", OperandFormat::Branch},
    {Opcode::BLT, "BLT", OperandFormat::Branch},
    {Opcode::JMPR, "JMPR", OperandFormat::Jump},
    {Opcode::CALL, "CALL", OperandFormat::Jump},
    {Opcode::RET, "RET", OperandFormat::None},
    {Opcode::HALT, "HALT", OperandFormat::None},
}};

inline const OpcodeInfo* find_opcode(std::uint8_t raw) noexcept {
  for (const auto& info : kOpcodes) {
    if (static_cast<std::uint8_t>(info.op) == raw) return &info;
  }
  return nullptr;
}

inline const OpcodeInfo& opcode_info(Opcode op) noexcept {
  return *find_opcode(static_cast<std::uint8_t>(op));
}

// Control transfers stall fetch until they retire.
inline constexpr bool is_control(Opcode op) noexcept {
  switch (op) {
    case Opcode::BEQ:
    case Opcode::BLT:
    case Opcode::JMPR:
    case Opcode::CALL:
    case Opcode::RET:
    case Opcode::HALT:
      return true;
    default:
      return false;
  }
}

inline constexpr unsigned kPipelineDepth = 4;

/// Issue slots an instruction occupies. Control instructions annul the three
/// younger stages, so each costs the full pipeline depth whether or not a
/// branch is taken. Costs never depend on data.
inline constexpr Cycles instruction_cost(Opcode op) noexcept {
  return is_control(op) ? kPipelineDepth : 1;
}

struct Instruction {
  Opcode op = Opcode::NOP;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout: [31:24] opcode, [23:19] rd, [18:14] rs1, [13:9] rs2, [8:0] zero.
inline constexpr Word encode(const Instruction& in) noexcept {
  return (Word{static_cast<std::uint8_t>(in.op)} << 24) | (Word{in.rd & 31u} << 19) |
         (Word{in.rs1 & 31u} << 14) | (Word{in.rs2 & 31u} << 9);
}

inline std::optional<Instruction> try_decode(Word w) noexcept {
  const auto* info = find_opcode(static_cast<std::uint8_t>(w >> 24));
  if (info == nullptr || (w & 0x1FFu) != 0) return std::nullopt;
  Instruction in{info->op, static_cast<std::uint8_t>((w >> 19) & 31u),
                 static_cast<std::uint8_t>((w >> 14) & 31u),
                 static_cast<std::uint8_t>((w >> 9) & 31u)};
  bool rd_used = false, rs1_used = false, rs2_used = false;
  switch (info->format) {
    case OperandFormat::None: break;
    case OperandFormat::Alu: rd_used = rs1_used = rs2_used = true; break;
    case OperandFormat::Load: rd_used = rs1_used = true; break;
    case OperandFormat::Store: rs1_used = rs2_used = true; break;
    case OperandFormat::Const: rd_used = true; break;
    case OperandFormat::Branch: rd_used = rs1_used = rs2_used = true; break;
    case OperandFormat::Jump: rs1_used = true; break;
  }
  if ((!rd_used && in.rd) || (!rs1_used && in.rs1) || (!rs2_used && in.rs2)) return std::nullopt;
  return in;
}

inline Instruction decode(Word w) {
  if (auto in = try_decode(w)) return *in;
  throw DecodeError("invalid instruction word");
}

// A loadable partition program. data_init addresses are partition-visible
// (n-1 bit) addresses and are kept sorted and unique.
struct BinaryImage {
  std::vector<Word> words;
  std::uint32_t entry_point = 0;
  std::vector<std::pair<Word, Word>> data_init;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns a list of problems; empty means the image is loadable on a
/// memory with `address_bits` total physical address bits.
inline std::vector<std::string> check_image(const BinaryImage& image, unsigned address_bits) {
  std::vector<std::string> problems;
  if (image.words.empty()) {
    problems.emplace_back("image has no instructions");
  } else if (image.entry_point >= image.words.size()) {
    problems.emplace_back("entry point " + std::to_string(image.entry_point) + " outside image of " +
                          std::to_string(image.words.size()) + " words");
  }
  const std::uint64_t visible_limit = std::uint64_t{1} << (address_bits - 1);
  for (std::size_t i = 0; i < image.data_init.size(); ++i) {
    if (image.data_init[i].first >= visible_limit) {
      problems.push_back("data_init address " + std::to_string(image.data_init[i].first) +
                         " exceeds the " + std::to_string(address_bits - 1) + "-bit visible space");
    }
    if (i > 0 && image.data_init[i].first <= image.data_init[i - 1].first) {
      problems.emplace_back("data_init addresses must be strictly increasing");
    }
  }
  return problems;
}

namespace detail {

inline void put_u32(std::string& out, Word v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline Word get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ImageError("truncated image");
  Word v = 0;
  for (int i = 0; i < 4; ++i) v |= Word{static_cast<unsigned char>(in[pos + i])} << (8 * i);
  pos += 4;
  return v;
}

}  // namespace detail

inline constexpr std::string_view kImageMagic = "PRTA";
inline constexpr std::uint8_t kImageVersion = 0x01;

// "PRTA" 0x01 | u32 count | words | u32 count | (u32 addr, u32 value)... all LE.
// The format has no entry field, so only entry point 0 can be serialised.
inline std::string serialize_image(const BinaryImage& image) {
  if (image.entry_point != 0) {
    throw ImageError("binary images start at word 0; move the .entry code to the top");
  }
  std::string out{kImageMagic};
  out.push_back(static_cast<char>(kImageVersion));
  detail::put_u32(out, static_cast<Word>(image.words.size()));
  for (Word w : image.words) detail::put_u32(out, w);
  detail::put_u32(out, static_cast<Word>(image.data_init.size()));
  for (auto [addr, value] : image.data_init) {
    detail::put_u32(out, addr);
    detail::put_u32(out, value);
  }
  return out;
}

inline BinaryImage deserialize_image(std::string_view bytes) {
  if (bytes.size() < 5 || bytes.substr(0, 4) != kImageMagic) throw ImageError("bad magic");
  if (static_cast<std::uint8_t>(bytes[4]) != kImageVersion) throw ImageError("unsupported image version");
  std::size_t pos = 5;
  BinaryImage image;
  const Word count = detail::get_u32(bytes, pos);
  if (count > (bytes.size() - pos) / 4) throw ImageError("truncated image");
  image.words.reserve(count);
  for (Word i = 0; i < count; ++i) image.words.push_back(detail::get_u32(bytes, pos));
  const Word pairs = detail::get_u32(bytes, pos);
  if (pairs > (bytes.size() - pos) / 8) throw ImageError("truncated image");
  for (Word i = 0; i < pairs; ++i) {
    Word addr = detail::get_u32(bytes, pos);
    Word value = detail::get_u32(bytes, pos);
    image.data_init.emplace_back(addr, value);
  }
  if (pos != bytes.size()) throw ImageError("trailing bytes after image");
  return image;
}

}  // namespace partaa
