#pragma once

// Symbolic state layout of a program: the block registers curr/pred plus the
// set V of registers whose values must survive a block transition.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bvreach/mir.hpp"

namespace bvreach {

struct StateSlot {
  std::string name;
  uint32_t width;
  uint32_t first_bit;  // 1-based index of the least significant bit
  std::optional<mir::RegId> reg;

  uint32_t last_bit() const { return first_bit + width - 1; }
};

struct BlockRef {
  enum class Kind { Program, Ok, Error, Invalid };
  Kind kind = Kind::Invalid;
  mir::BlockId block = 0;

  bool operator==(const BlockRef&) const = default;
};

// Number of bits needed to write x in binary (0 for x == 0).
inline uint32_t bit_length(uint64_t x) {
  uint32_t n = 0;
  while (x) {
    ++n;
    x >>= 1;
  }
  return n;
}

class StateSpace {
 public:
  static constexpr size_t kCurr = 0;
  static constexpr size_t kPred = 1;

  static StateSpace build(const mir::Program& p) {
    StateSpace s;
    s.num_blocks_ = static_cast<uint32_t>(p.blocks.size());
    s.block_width_ = bit_length(s.num_blocks_ + 2);
    s.slot_of_reg_.assign(p.registers.size(), std::nullopt);
    for (mir::BlockId b = 0; b < p.blocks.size(); ++b) s.labels_.push_back(p.blocks[b].label);

    std::vector<bool> in_v(p.registers.size(), false);
    auto note_use = [&](const mir::Operand& o, mir::BlockId user) {
      if (o.is_reg() && p.registers[o.reg].block != user) in_v[o.reg] = true;
    };
    for (mir::BlockId b = 0; b < p.blocks.size(); ++b) {
      const mir::Block& blk = p.blocks[b];
      // Phi incoming values are read on entry, before anything in the block
      // is written, so they always live in the state.
      for (const mir::Phi& phi : blk.phis) {
        for (const auto& inc : phi.incoming) {
          if (inc.first.is_reg()) in_v[inc.first.reg] = true;
        }
      }
      for (const mir::Instr& ins : blk.body) {
        for (const mir::Operand& o : mir::used_operands(ins)) note_use(o, b);
      }
      for (const mir::Operand& o : mir::used_operands(blk.term)) note_use(o, b);
    }

    uint32_t bit = 1;
    auto add_slot = [&](std::string name, uint32_t width, std::optional<mir::RegId> reg) {
      s.slots_.push_back(StateSlot{std::move(name), width, bit, reg});
      bit += width;
    };
    add_slot("curr", s.block_width_, std::nullopt);
    add_slot("pred", s.block_width_, std::nullopt);
    for (mir::RegId r = 0; r < p.registers.size(); ++r) {
      if (!in_v[r]) continue;
      s.slot_of_reg_[r] = s.slots_.size();
      add_slot(p.registers[r].name, p.registers[r].width, r);
    }
    s.num_bits_ = bit - 1;
    return s;
  }

  uint32_t block_width() const { return block_width_; }
  uint32_t num_blocks() const { return num_blocks_; }
  uint32_t num_bits() const { return num_bits_; }

  uint32_t code(mir::BlockId b) const { return b + 1; }
  uint32_t ok_code() const { return num_blocks_ + 1; }
  uint32_t error_code() const { return num_blocks_ + 2; }
  uint32_t max_code() const { return num_blocks_ + 2; }

  // All slots: curr, pred, then V in definition order.
  const std::vector<StateSlot>& slots() const { return slots_; }
  size_t num_vars() const { return slots_.size() - 2; }
  const StateSlot& slot(size_t i) const { return slots_[i]; }

  std::optional<size_t> slot_of(mir::RegId r) const { return r < slot_of_reg_.size() ? slot_of_reg_[r] : std::nullopt; }

  BlockRef decode_block(uint64_t code) const {
    if (code >= 1 && code <= num_blocks_) return {BlockRef::Kind::Program, static_cast<mir::BlockId>(code - 1)};
    if (code == ok_code()) return {BlockRef::Kind::Ok, 0};
    if (code == error_code()) return {BlockRef::Kind::Error, 0};
    return {BlockRef::Kind::Invalid, 0};
  }

  std::string block_name(uint64_t code) const {
    const BlockRef r = decode_block(code);
    switch (r.kind) {
      case BlockRef::Kind::Program: return labels_[r.block];
      case BlockRef::Kind::Ok: return "ok";
      case BlockRef::Kind::Error: return "error";
      case BlockRef::Kind::Invalid: break;
    }
    return "invalid(" + std::to_string(code) + ")";
  }

  // `--dump-state` format: "name width first..last", one slot per line.
  void dump(std::ostream& os) const {
    for (const StateSlot& sl : slots_) {
      os << sl.name << ' ' << sl.width << ' ' << sl.first_bit << ".." << sl.last_bit() << '\n';
    }
  }

 private:
  uint32_t num_blocks_ = 0;
  uint32_t block_width_ = 0;
  uint32_t num_bits_ = 0;
  std::vector<StateSlot> slots_;
  std::vector<std::optional<size_t>> slot_of_reg_;
  std::vector<std::string> labels_;
};

}  // namespace bvreach
