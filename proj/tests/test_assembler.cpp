#include <gtest/gtest.h>

#include <random>

#include "partaa/assembler.hpp"

using namespace partaa;

namespace {

std::string random_program(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(0, kOpcodes.size() - 1);
  std::uniform_int_distribution<unsigned> r(0, 31);
  std::string src;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& info = kOpcodes[pick(rng)];
    Instruction in{info.op};
    switch (info.format) {
      case OperandFormat::None: break;
      case OperandFormat::Alu:
      case OperandFormat::Branch:
        in.rd = static_cast<std::uint8_t>(r(rng));
        in.rs1 = static_cast<std::uint8_t>(r(rng));
        in.rs2 = static_cast<std::uint8_t>(r(rng));
        break;
      case OperandFormat::Load: in.rd = static_cast<std::uint8_t>(r(rng)); in.rs1 = static_cast<std::uint8_t>(r(rng)); break;
      case OperandFormat::Store: in.rs1 = static_cast<std::uint8_t>(r(rng)); in.rs2 = static_cast<std::uint8_t>(r(rng)); break;
      case OperandFormat::Const: in.rd = static_cast<std::uint8_t>(r(rng)); break;
      case OperandFormat::Jump: in.rs1 = static_cast<std::uint8_t>(r(rng)); break;
    }
    if (in.op == Opcode::LD_K) {
      src += "LOADK r" + std::to_string(in.rd) + ", " + std::to_string(rng() & 0xFFFF) + "\n";
    } else {
      src += format_instruction(in) + "\n";
    }
  }
  return src;
}

}  // namespace

TEST(Assembler, ThreeInstructionsWithOneWord) {
  const auto img = assemble(
      ".data\n"
      ".word LIMIT 10\n"
      ".text\n"
      "loop: ADD r1, r1, r2\n"
      "      BLT r1, r3, r4\n"
      "      HALT\n");
  EXPECT_EQ(img.words.size(), 3u);
  ASSERT_EQ(img.data_init.size(), 1u);
  const AddressMap map;
  EXPECT_EQ(img.data_init[0].first, map.protected_bit() | (map.literal_pool_base() + 3));
  EXPECT_EQ(img.data_init[0].second, 10u);

  const auto again = assemble(disassemble(img));
  EXPECT_EQ(again.words, img.words);
  EXPECT_EQ(again.data_init, img.data_init);
}

TEST(Assembler, LoadkResolvesCodeAndDataLabels) {
  const auto img = assemble(
      ".data\n"
      ".word K 0x1234\n"
      ".text\n"
      "start: LOADK r1, K\n"
      "       LOADK r2, target\n"
      "       LOADA r3, K\n"
      "       LOADK r4, -1\n"
      "target: HALT\n");
  const AddressMap map;
  const Word pool = map.protected_bit() | map.literal_pool_base();
  ASSERT_EQ(img.data_init.size(), 5u);
  EXPECT_EQ(img.data_init[0], std::make_pair(pool + 0, Word{0x1234}));
  EXPECT_EQ(img.data_init[1], std::make_pair(pool + 1, Word{4}));
  EXPECT_EQ(img.data_init[2], std::make_pair(pool + 2, map.literal_pool_base() + 5));
  EXPECT_EQ(img.data_init[3], std::make_pair(pool + 3, Word{0xFFFFFFFF}));
  EXPECT_EQ(img.data_init[4], std::make_pair(pool + 5, Word{0x1234}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(decode(img.words[i]).op, Opcode::LD_K);
}

TEST(Assembler, EntryDirective) {
  const auto img = assemble("NOP\nmain: HALT\n.entry main\n");
  EXPECT_EQ(img.entry_point, 1u);
  const auto again = assemble(disassemble(img));
  EXPECT_EQ(again.entry_point, 1u);
  EXPECT_EQ(again.words, img.words);
}

TEST(Assembler, ErrorsCarryLineNumbers) {
  try {
    assemble("NOP\nNOP\nLOADK r1, nowhere\n");
    FAIL() << "expected an error";
  } catch (const AssemblyError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("nowhere"), std::string::npos);
  }
  EXPECT_THROW(assemble("ADD r1, r2, r32"), AssemblyError);
  EXPECT_THROW(assemble("ADD r1, r2"), AssemblyError);
  EXPECT_THROW(assemble("FOO r1"), AssemblyError);
  EXPECT_THROW(assemble("a: NOP\na: HALT"), AssemblyError);
  EXPECT_THROW(assemble(".bogus\nHALT"), AssemblyError);
  EXPECT_THROW(assemble("; only a comment\n"), AssemblyError);
  EXPECT_THROW(assemble("HALT\n.entry missing\n"), AssemblyError);
}

TEST(Assembler, CommentsAndCase) {
  const auto a = assemble("  add r1, R2, r3 ; comment\n\n; full line\nhalt");
  const auto b = assemble("ADD r1, r2, r3\nHALT");
  EXPECT_EQ(a.words, b.words);
}

TEST(Disassembler, SingleNop) { EXPECT_EQ(disassemble(assemble("NOP")), "NOP\n"); }

TEST(Disassembler, InverseOfAssemble) {
  BinaryImage img;
  img.words = {encode({Opcode::ADD, 3, 1, 2})};
  EXPECT_EQ(disassemble(img), "ADD r3, r1, r2\n");
}

TEST(Disassembler, ReportsInvalidWordIndex) {
  BinaryImage img;
  img.words = {0, 0xFF000000u};
  try {
    disassemble(img);
    FAIL() << "expected an error";
  } catch (const DisassemblyError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Disassembler, RandomProgramsRoundTrip) {
  std::mt19937 rng(42);
  for (int k = 0; k < 50; ++k) {
    const auto img = assemble(random_program(rng, 100));
    ASSERT_EQ(img.words.size(), 100u);
    const auto again = assemble(disassemble(img));
    EXPECT_EQ(again.words, img.words);
    EXPECT_EQ(again.data_init, img.data_init);
    EXPECT_EQ(again.entry_point, img.entry_point);
  }
}
