#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "partaa/address_map.hpp"
#include "partaa/isa.hpp"

namespace partaa {

class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DisassemblyError : public std::runtime_error {
 public:
  DisassemblyError(std::size_t index, Word word)
      : std::runtime_error("invalid instruction word 0x" + hex(word) + " at index " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  static std::string hex(Word w) {
    std::ostringstream os;
    os << std::hex << w;
    return os.str();
  }
  std::size_t index_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

inline std::optional<Word> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool negative = false;
  if (s[0] == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v > 0xFFFFFFFFull) return std::nullopt;
  return negative ? static_cast<Word>(0u - static_cast<Word>(v)) : static_cast<Word>(v);
}

inline std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',' || std::isspace(static_cast<unsigned char>(s[i]))) {
      if (i > start) out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

struct AssemblerOptions {
  AddressMap map{};
};

/// Two-pass assembler. Every source instruction emits exactly one word, so
/// label indices are known after the first pass. Pseudo-instructions:
///   LOADK rd, <label|number>  LD.K with the label's value (code label: its
///                             word index; data label: its initial value)
///   LOADA rd, <data label>    LD.K with the slot's segment offset
/// A LD.K at word i reads protected offset (literal pool base + i); the
/// assembler emits the matching data_init entry.
inline BinaryImage assemble(std::string_view source, const AssemblerOptions& options = {}) {
  using detail::trim;
  const AddressMap& map = options.map;
  if (auto e = map.check_layout(); !e.empty()) throw AssemblyError(0, e);

  struct TextItem {
    std::size_t line;
    std::string mnemonic;
    std::vector<std::string_view> operands;
  };
  struct DataItem {
    std::size_t line;
    std::string label;
    std::string_view value;
  };
  struct InitItem {
    std::size_t line;
    Word addr;
    Word value;
  };

  std::vector<TextItem> text;
  std::vector<DataItem> data;
  std::vector<InitItem> inits;
  std::map<std::string, std::uint32_t> code_labels;
  std::map<std::string, std::size_t> data_labels;
  std::optional<std::pair<std::size_t, std::string>> entry;
  bool in_data = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t eol = source.find('\n', pos);
    if (eol == std::string_view::npos) eol = source.size();
    std::string_view line = source.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);
    line = trim(line);

    while (true) {
      auto colon = line.find(':');
      if (colon == std::string_view::npos) break;
      std::string_view label = trim(line.substr(0, colon));
      if (!detail::is_identifier(label)) throw AssemblyError(line_no, "bad label '" + std::string(label) + "'");
      if (in_data) throw AssemblyError(line_no, "labels in .data are given by .word");
      std::string name(label);
      if (code_labels.count(name) || data_labels.count(name)) {
        throw AssemblyError(line_no, "duplicate label '" + name + "'");
      }
      code_labels[name] = static_cast<std::uint32_t>(text.size());
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    auto ops = detail::split_operands(line);
    std::string head = detail::upper(ops.front());
    ops.erase(ops.begin());

    if (head == ".TEXT" || head == ".DATA") {
      if (!ops.empty()) throw AssemblyError(line_no, head + " takes no operands");
      in_data = head == ".DATA";
    } else if (head == ".ENTRY") {
      if (ops.size() != 1) throw AssemblyError(line_no, ".entry expects one label");
      entry.emplace(line_no, std::string(ops[0]));
    } else if (head == ".WORD") {
      if (ops.size() != 2 || !detail::is_identifier(ops[0])) {
        throw AssemblyError(line_no, ".word expects <label> <value>");
      }
      std::string name(ops[0]);
      if (code_labels.count(name) || data_labels.count(name)) {
        throw AssemblyError(line_no, "duplicate label '" + name + "'");
      }
      data_labels[name] = data.size();
      data.push_back({line_no, name, ops[1]});
    } else if (head == ".INIT") {
      if (ops.size() != 2) throw AssemblyError(line_no, ".init expects <address> <value>");
      auto a = detail::parse_number(ops[0]);
      auto v = detail::parse_number(ops[1]);
      if (!a || !v) throw AssemblyError(line_no, ".init expects numeric operands");
      inits.push_back({line_no, *a, *v});
    } else if (head.front() == '.') {
      throw AssemblyError(line_no, "unknown directive " + head);
    } else {
      if (in_data) throw AssemblyError(line_no, "instruction in .data section");
      text.push_back({line_no, head, std::move(ops)});
    }
  }

  const Word data_base = map.literal_pool_base() + static_cast<Word>(text.size());
  if (data_base + data.size() > map.rx_count_base()) {
    throw AssemblyError(line_no, "program and data do not fit below the NI window");
  }

  auto resolve_value = [&](std::size_t line, std::string_view tok) -> Word {
    if (auto n = detail::parse_number(tok)) return *n;
    std::string name(tok);
    if (auto it = code_labels.find(name); it != code_labels.end()) return it->second;
    if (auto it = data_labels.find(name); it != data_labels.end()) {
      const DataItem& d = data[it->second];
      if (auto n = detail::parse_number(d.value)) return *n;
      if (auto c = code_labels.find(std::string(d.value)); c != code_labels.end()) return c->second;
      throw AssemblyError(d.line, "undefined label '" + std::string(d.value) + "'");
    }
    throw AssemblyError(line, "undefined label '" + name + "'");
  };

  auto reg = [](std::size_t line, std::string_view tok) -> std::uint8_t {
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) {
      throw AssemblyError(line, "expected register, got '" + std::string(tok) + "'");
    }
    auto n = detail::parse_number(tok.substr(1));
    if (!n || tok[1] == '-' || tok.substr(1, 2) == "0x") {
      throw AssemblyError(line, "expected register, got '" + std::string(tok) + "'");
    }
    if (*n >= kRegisterCount) throw AssemblyError(line, "register index out of range: " + std::string(tok));
    return static_cast<std::uint8_t>(*n);
  };

  BinaryImage image;
  std::map<Word, Word> init_map;
  auto add_init = [&](std::size_t line, Word addr, Word value) {
    if (addr >= map.visible_limit()) throw AssemblyError(line, "data address outside the visible space");
    if (!init_map.emplace(addr, value).second) throw AssemblyError(line, "data address initialised twice");
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const TextItem& t = text[i];
    auto expect = [&](std::size_t n) {
      if (t.operands.size() != n) {
        throw AssemblyError(t.line, t.mnemonic + " expects " + std::to_string(n) + " operand(s)");
      }
    };
    const Word pool_slot = map.protected_bit() | (map.literal_pool_base() + static_cast<Word>(i));
    if (t.mnemonic == "LOADK" || t.mnemonic == "LOADA") {
      expect(2);
      Word value = 0;
      if (t.mnemonic == "LOADK") {
        value = resolve_value(t.line, t.operands[1]);
      } else if (auto it = data_labels.find(std::string(t.operands[1])); it != data_labels.end()) {
        value = data_base + static_cast<Word>(it->second);
      } else {
        throw AssemblyError(t.line, "LOADA expects a data label, got '" + std::string(t.operands[1]) + "'");
      }
      image.words.push_back(encode({Opcode::LD_K, reg(t.line, t.operands[0]), 0, 0}));
      add_init(t.line, pool_slot, value);
      continue;
    }
    const OpcodeInfo* info = nullptr;
    for (const auto& candidate : kOpcodes) {
      if (candidate.mnemonic == t.mnemonic) info = &candidate;
    }
    if (info == nullptr) throw AssemblyError(t.line, "unknown mnemonic " + t.mnemonic);
    Instruction in{info->op};
    switch (info->format) {
      case OperandFormat::None: expect(0); break;
      case OperandFormat::Alu:
      case OperandFormat::Branch:
        expect(3);
        if (info->format == OperandFormat::Alu) {
          in.rd = reg(t.line, t.operands[0]);
          in.rs1 = reg(t.line, t.operands[1]);
          in.rs2 = reg(t.line, t.operands[2]);
        } else {
          in.rs1 = reg(t.line, t.operands[0]);
          in.rs2 = reg(t.line, t.operands[1]);
          in.rd = reg(t.line, t.operands[2]);
        }
        break;
      case OperandFormat::Load:
        expect(2);
        in.rd = reg(t.line, t.operands[0]);
        in.rs1 = reg(t.line, t.operands[1]);
        break;
      case OperandFormat::Store:
        expect(2);
        in.rs1 = reg(t.line, t.operands[0]);
        in.rs2 = reg(t.line, t.operands[1]);
        break;
      case OperandFormat::Const:
        expect(1);
        in.rd = reg(t.line, t.operands[0]);
        break;
      case OperandFormat::Jump:
        expect(1);
        in.rs1 = reg(t.line, t.operands[0]);
        break;
    }
    image.words.push_back(encode(in));
  }

  for (std::size_t j = 0; j < data.size(); ++j) {
    add_init(data[j].line, map.protected_bit() | (data_base + static_cast<Word>(j)),
             resolve_value(data[j].line, data[j].value));
  }
  for (const auto& init : inits) add_init(init.line, init.addr, init.value);

  if (entry) {
    auto it = code_labels.find(entry->second);
    if (it == code_labels.end()) throw AssemblyError(entry->first, "undefined label '" + entry->second + "'");
    image.entry_point = it->second;
  }
  if (image.words.empty()) throw AssemblyError(line_no, "program has no instructions");
  if (image.entry_point >= image.words.size()) throw AssemblyError(entry ? entry->first : line_no, "entry label past the last instruction");
  image.data_init.assign(init_map.begin(), init_map.end());
  return image;
}

inline std::string format_instruction(const Instruction& in) {
  const OpcodeInfo& info = opcode_info(in.op);
  std::string out(info.mnemonic);
  auto r = [](unsigned i) { return "r" + std::to_string(i); };
  switch (info.format) {
    case OperandFormat::None: break;
    case OperandFormat::Alu: out += " " + r(in.rd) + ", " + r(in.rs1) + ", " + r(in.rs2); break;
    case OperandFormat::Load: out += " " + r(in.rd) + ", " + r(in.rs1); break;
    case OperandFormat::Store: out += " " + r(in.rs1) + ", " + r(in.rs2); break;
    case OperandFormat::Const: out += " " + r(in.rd); break;
    case OperandFormat::Branch: out += " " + r(in.rs1) + ", " + r(in.rs2) + ", " + r(in.rd); break;
    case OperandFormat::Jump: out += " " + r(in.rs1); break;
  }
  return out;
}

/// Literal listing: raw LD.K words plus one `.init` per data_init pair, so
/// assemble(disassemble(image)) reproduces words and data_init exactly.
inline std::string disassemble(const BinaryImage& image) {
  std::ostringstream os;
  for (std::size_t i = 0; i < image.words.size(); ++i) {
    auto in = try_decode(image.words[i]);
    if (!in) throw DisassemblyError(i, image.words[i]);
    if (image.entry_point != 0 && i == image.entry_point) os << "entry:\n";
    os << format_instruction(*in) << '\n';
  }
  if (image.entry_point != 0) os << ".entry entry\n";
  if (!image.data_init.empty()) {
    os << ".data\n" << std::hex;
    for (auto [addr, value] : image.data_init) os << ".init 0x" << addr << " 0x" << value << '\n';
  }
  return os.str();
}

}  // namespace partaa
