#pragma once

// In-memory form of the SSA mini-IR: one pre-inlined `main` function made of
// basic blocks over fixed-width integer registers.

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bvreach::mir {

using RegId = uint32_t;
using BlockId = uint32_t;

inline constexpr uint32_t kMaxWidth = 64;

inline constexpr uint64_t width_mask(uint32_t width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

struct Operand {
  enum class Kind { Reg, Const };
  Kind kind = Kind::Const;
  RegId reg = 0;
  uint64_t value = 0;  // already reduced modulo 2^width

  static Operand of_reg(RegId r) { return {Kind::Reg, r, 0}; }
  static Operand of_const(uint64_t v) { return {Kind::Const, 0, v}; }
  bool is_reg() const { return kind == Kind::Reg; }
  bool operator==(const Operand&) const = default;
};

enum class BinOpKind { Add, Sub, Mul, SDiv, UDiv, SRem, URem, And, Or, Xor, Shl, LShr, AShr };
enum class CmpPred { Eq, Ne, Ugt, Uge, Ult, Ule, Sgt, Sge, Slt, Sle };
enum class Intrinsic { Assume, Assert, Error };

struct BinOp {
  BinOpKind op;
  bool nsw = false;
  bool nuw = false;
  bool exact = false;
  uint32_t width;
  Operand lhs, rhs;
  RegId dest;
  bool operator==(const BinOp&) const = default;
};

struct ICmp {
  CmpPred pred;
  uint32_t width;  // operand width; the result is i1
  Operand lhs, rhs;
  RegId dest;
  bool operator==(const ICmp&) const = default;
};

struct Ext {
  bool is_signed;
  uint32_t from_width, to_width;
  Operand src;
  RegId dest;
  bool operator==(const Ext&) const = default;
};

struct Select {
  Operand cond;  // i1
  uint32_t width;
  Operand then_value, else_value;
  RegId dest;
  bool operator==(const Select&) const = default;
};

struct Call {
  Intrinsic fn;
  uint32_t arg_width = 0;  // 0 for error()
  Operand arg;
  bool operator==(const Call&) const = default;
};

using Instr = std::variant<BinOp, ICmp, Ext, Select, Call>;

struct Phi {
  RegId dest;
  uint32_t width;
  std::vector<std::pair<Operand, BlockId>> incoming;
  bool operator==(const Phi&) const = default;
};

struct BrUncond {
  BlockId target;
  bool operator==(const BrUncond&) const = default;
};
struct BrCond {
  Operand cond;
  BlockId then_block, else_block;
  bool operator==(const BrCond&) const = default;
};
struct Ret {
  uint32_t width;
  Operand value;
  bool operator==(const Ret&) const = default;
};
struct Unreachable {
  bool operator==(const Unreachable&) const = default;
};

using Terminator = std::variant<BrUncond, BrCond, Ret, Unreachable>;

struct Block {
  std::string label;
  std::vector<Phi> phis;
  std::vector<Instr> body;
  Terminator term;
  bool operator==(const Block&) const = default;
};

struct Register {
  std::string name;  // without the leading '%'
  uint32_t width;
  BlockId block;     // defining block
  bool operator==(const Register&) const = default;
};

// Registers are stored in textual definition order.
struct Program {
  uint32_t return_width = 32;
  std::vector<Block> blocks;
  std::vector<Register> registers;
  BlockId entry = 0;

  bool operator==(const Program&) const = default;

  std::optional<BlockId> find_block(std::string_view label) const {
    for (BlockId b = 0; b < blocks.size(); ++b) {
      if (blocks[b].label == label) return b;
    }
    return std::nullopt;
  }

  std::optional<RegId> find_register(std::string_view name) const {
    for (RegId r = 0; r < registers.size(); ++r) {
      if (registers[r].name == name) return r;
    }
    return std::nullopt;
  }

  uint32_t width_of(RegId r) const { return registers[r].width; }
};

inline std::vector<BlockId> successors(const Block& b) {
  return std::visit(
      [](const auto& t) -> std::vector<BlockId> {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, BrUncond>) {
          return {t.target};
        } else if constexpr (std::is_same_v<T, BrCond>) {
          if (t.then_block == t.else_block) return {t.then_block};
          return {t.then_block, t.else_block};
        } else {
          return {};
        }
      },
      b.term);
}

// Predecessor lists, each sorted and without duplicates.
inline std::vector<std::vector<BlockId>> predecessors(const Program& p) {
  std::vector<std::vector<BlockId>> preds(p.blocks.size());
  for (BlockId b = 0; b < p.blocks.size(); ++b) {
    for (BlockId s : successors(p.blocks[b])) preds[s].push_back(b);
  }
  return preds;
}

inline std::optional<RegId> defined_register(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> std::optional<RegId> {
        if constexpr (std::is_same_v<std::decay_t<decltype(i)>, Call>) {
          return std::nullopt;
        } else {
          return i.dest;
        }
      },
      ins);
}

// Operands read by an instruction, in source order.
inline std::vector<Operand> used_operands(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> std::vector<Operand> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, BinOp> || std::is_same_v<T, ICmp>) {
          return {i.lhs, i.rhs};
        } else if constexpr (std::is_same_v<T, Ext>) {
          return {i.src};
        } else if constexpr (std::is_same_v<T, Select>) {
          return {i.cond, i.then_value, i.else_value};
        } else {
          if (i.fn == Intrinsic::Error) return {};
          return {i.arg};
        }
      },
      ins);
}

inline std::vector<Operand> used_operands(const Terminator& t) {
  if (const auto* c = std::get_if<BrCond>(&t)) return {c->cond};
  if (const auto* r = std::get_if<Ret>(&t)) return {r->value};
  return {};
}

inline std::string_view to_string(BinOpKind k) {
  switch (k) {
    case BinOpKind::Add: return "add";
    case BinOpKind::Sub: return "sub";
    case BinOpKind::Mul: return "mul";
    case BinOpKind::SDiv: return "sdiv";
    case BinOpKind::UDiv: return "udiv";
    case BinOpKind::SRem: return "srem";
    case BinOpKind::URem: return "urem";
    case BinOpKind::And: return "and";
    case BinOpKind::Or: return "or";
    case BinOpKind::Xor: return "xor";
    case BinOpKind::Shl: return "shl";
    case BinOpKind::LShr: return "lshr";
    case BinOpKind::AShr: return "ashr";
  }
  return "?";
}

inline std::string_view to_string(CmpPred p) {
  switch (p) {
    case CmpPred::Eq: return "eq";
    case CmpPred::Ne: return "ne";
    case CmpPred::Ugt: return "ugt";
    case CmpPred::Uge: return "uge";
    case CmpPred::Ult: return "ult";
    case CmpPred::Ule: return "ule";
    case CmpPred::Sgt: return "sgt";
    case CmpPred::Sge: return "sge";
    case CmpPred::Slt: return "slt";
    case CmpPred::Sle: return "sle";
  }
  return "?";
}

inline std::string_view intrinsic_name(Intrinsic fn) {
  switch (fn) {
    case Intrinsic::Assume: return "__VERIFIER_assume";
    case Intrinsic::Assert: return "__VERIFIER_assert";
    case Intrinsic::Error: return "__VERIFIER_error";
  }
  return "?";
}

// Pretty printer producing text the parser accepts.
class Printer {
 public:
  explicit Printer(const Program& p) : p_(p) {}

  void print(std::ostream& os) const {
    os << "define i" << p_.return_width << " @main() {\n";
    for (BlockId b = 0; b < p_.blocks.size(); ++b) {
      const Block& blk = p_.blocks[b];
      if (b > 0) os << '\n';
      os << blk.label << ":\n";
      for (const Phi& phi : blk.phis) {
        os << "  %" << reg(phi.dest) << " = phi i" << phi.width;
        for (size_t k = 0; k < phi.incoming.size(); ++k) {
          os << (k == 0 ? " " : ", ") << "[ " << operand(phi.incoming[k].first, phi.width) << ", %"
             << p_.blocks[phi.incoming[k].second].label << " ]";
        }
        os << '\n';
      }
      for (const Instr& ins : blk.body) os << "  " << instr(ins) << '\n';
      os << "  " << terminator(blk.term) << '\n';
    }
    os << "}\n";
  }

  std::string instr(const Instr& ins) const {
    std::ostringstream os;
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, BinOp>) {
            os << '%' << reg(i.dest) << " = " << to_string(i.op);
            if (i.nuw) os << " nuw";
            if (i.nsw) os << " nsw";
            if (i.exact) os << " exact";
            os << " i" << i.width << ' ' << operand(i.lhs, i.width) << ", " << operand(i.rhs, i.width);
          } else if constexpr (std::is_same_v<T, ICmp>) {
            os << '%' << reg(i.dest) << " = icmp " << to_string(i.pred) << " i" << i.width << ' '
               << operand(i.lhs, i.width) << ", " << operand(i.rhs, i.width);
          } else if constexpr (std::is_same_v<T, Ext>) {
            os << '%' << reg(i.dest) << " = " << (i.is_signed ? "sext" : "zext") << " i" << i.from_width << ' '
               << operand(i.src, i.from_width) << " to i" << i.to_width;
          } else if constexpr (std::is_same_v<T, Select>) {
            os << '%' << reg(i.dest) << " = select i1 " << operand(i.cond, 1) << ", i" << i.width << ' '
               << operand(i.then_value, i.width) << ", i" << i.width << ' ' << operand(i.else_value, i.width);
          } else {
            os << "call void @" << intrinsic_name(i.fn) << '(';
            if (i.fn != Intrinsic::Error) os << 'i' << i.arg_width << ' ' << operand(i.arg, i.arg_width);
            os << ')';
          }
        },
        ins);
    return os.str();
  }

  std::string terminator(const Terminator& t) const {
    std::ostringstream os;
    std::visit(
        [&](const auto& term) {
          using T = std::decay_t<decltype(term)>;
          if constexpr (std::is_same_v<T, BrUncond>) {
            os << "br label %" << p_.blocks[term.target].label;
          } else if constexpr (std::is_same_v<T, BrCond>) {
            os << "br i1 " << operand(term.cond, 1) << ", label %" << p_.blocks[term.then_block].label
               << ", label %" << p_.blocks[term.else_block].label;
          } else if constexpr (std::is_same_v<T, Ret>) {
            os << "ret i" << term.width << ' ' << operand(term.value, term.width);
          } else {
            os << "unreachable";
          }
        },
        t);
    return os.str();
  }

 private:
  const std::string& reg(RegId r) const { return p_.registers[r].name; }

  std::string operand(const Operand& o, uint32_t width) const {
    if (o.is_reg()) return "%" + reg(o.reg);
    if (width == 1) return o.value ? "true" : "false";
    return std::to_string(o.value);
  }

  const Program& p_;
};

inline std::string to_text(const Program& p) {
  std::ostringstream os;
  Printer(p).print(os);
  return os.str();
}

}  // namespace bvreach::mir
