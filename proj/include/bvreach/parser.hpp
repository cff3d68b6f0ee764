#pragma once

// Parser for the textual mini-IR, a strict subset of LLVM IR:
//
//   define i32 @main() {
//   entry:
//     %c = icmp uge i32 %x, 10
//     br i1 %c, label %loop, label %exit
//   ...
//   }
//
// Parsing happens in two phases. The first phase builds raw statements that
// still refer to registers and labels by name; the second resolves names,
// checks widths, and validates SSA form with a dominator analysis.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bvreach/error.hpp"
#include "bvreach/mir.hpp"

namespace bvreach::mir {

namespace detail {

enum class TokKind { Ident, Local, Global, Number, String, Attr, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  int line = 0;
  int col = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = TokKind::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (c == '%' || c == '@') {
        advance();
        if (pos_ < src_.size() && src_[pos_] == '"') {
          t.text = quoted();
        } else {
          t.text = word();
        }
        if (t.text.empty()) throw Error(ErrorKind::Syntax, std::string("expected name after '") + c + "'", t.line, t.col);
        t.kind = (c == '%') ? TokKind::Local : TokKind::Global;
      } else if (c == '#') {
        advance();
        t.kind = TokKind::Attr;
        t.text = word();
      } else if (c == '"') {
        t.kind = TokKind::String;
        t.text = quoted();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = TokKind::Number;
        t.text.push_back(c);
        advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          t.text.push_back(src_[pos_]);
          advance();
        }
        // Labels such as "1.i" continue past the digits.
        if (pos_ < src_.size() && is_word_char(src_[pos_]) && t.text[0] != '-') {
          t.kind = TokKind::Ident;
          t.text += word();
        }
      } else if (is_word_start(c)) {
        t.kind = TokKind::Ident;
        t.text = word();
      } else if (std::string_view("=,[](){}:*<>!").find(c) != std::string_view::npos) {
        t.kind = TokKind::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw Error(ErrorKind::Syntax, std::string("unexpected character '") + c + "'", t.line, t.col);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_word_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
  }
  static bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '-';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string word() {
    std::string w;
    while (pos_ < src_.size() && is_word_char(src_[pos_])) {
      w.push_back(src_[pos_]);
      advance();
    }
    return w;
  }

  std::string quoted() {
    const int l = line_, c = col_;
    advance();
    std::string w;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      w.push_back(src_[pos_]);
      advance();
    }
    if (pos_ >= src_.size()) throw Error(ErrorKind::Syntax, "unterminated string", l, c);
    advance();
    return w;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct RawOperand {
  bool is_reg = false;
  std::string name;
  uint64_t value = 0;  // two's complement 64-bit image of the literal
  int line = 0, col = 0;
};

struct RawLabelRef {
  std::string name;
  int line = 0, col = 0;
};

struct RawStmt {
  enum class Kind { BinOp, ICmp, Ext, Select, Phi, Call, Br, CondBr, Ret, Unreachable } kind;
  std::string dest;
  int line = 0, col = 0;
  BinOpKind binop = BinOpKind::Add;
  CmpPred pred = CmpPred::Eq;
  bool nsw = false, nuw = false, exact = false, is_signed = false;
  Intrinsic fn = Intrinsic::Error;
  uint32_t width = 0, to_width = 0;
  std::vector<RawOperand> ops;
  std::vector<RawLabelRef> labels;
};

struct RawBlock {
  std::string label;
  int line = 0, col = 0;
  std::vector<RawStmt> stmts;
};

inline const std::map<std::string_view, BinOpKind>& binop_table() {
  static const std::map<std::string_view, BinOpKind> t = {
      {"add", BinOpKind::Add},   {"sub", BinOpKind::Sub},   {"mul", BinOpKind::Mul},   {"sdiv", BinOpKind::SDiv},
      {"udiv", BinOpKind::UDiv}, {"srem", BinOpKind::SRem}, {"urem", BinOpKind::URem}, {"and", BinOpKind::And},
      {"or", BinOpKind::Or},     {"xor", BinOpKind::Xor},   {"shl", BinOpKind::Shl},   {"lshr", BinOpKind::LShr},
      {"ashr", BinOpKind::AShr}};
  return t;
}

inline const std::map<std::string_view, CmpPred>& pred_table() {
  static const std::map<std::string_view, CmpPred> t = {
      {"eq", CmpPred::Eq},   {"ne", CmpPred::Ne},   {"ugt", CmpPred::Ugt}, {"uge", CmpPred::Uge},
      {"ult", CmpPred::Ult}, {"ule", CmpPred::Ule}, {"sgt", CmpPred::Sgt}, {"sge", CmpPred::Sge},
      {"slt", CmpPred::Slt}, {"sle", CmpPred::Sle}};
  return t;
}

// LLVM opcodes outside the supported subset. Reported as "unsupported"
// rather than as syntax errors.
inline bool is_known_unsupported(std::string_view op) {
  static constexpr std::array<std::string_view, 37> ops = {
      "trunc",       "load",          "store",         "alloca",       "getelementptr", "bitcast",
      "inttoptr",    "ptrtoint",      "addrspacecast", "fadd",         "fsub",          "fmul",
      "fdiv",        "frem",          "fneg",          "fcmp",         "fpext",         "fptrunc",
      "fptoui",      "fptosi",        "uitofp",        "sitofp",       "extractvalue",  "insertvalue",
      "extractelement", "insertelement", "shufflevector", "atomicrmw", "cmpxchg",       "fence",
      "va_arg",      "landingpad",    "freeze",        "switch",       "indirectbr",    "invoke",
      "resume"};
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

class RawParser {
 public:
  explicit RawParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  uint32_t return_width = 0;
  std::vector<RawBlock> blocks;
  int body_line = 0;

  void parse_module() {
    bool seen_define = false;
    while (peek().kind != TokKind::End) {
      const Token& t = peek();
      if (t.kind == TokKind::Ident && t.text == "define") {
        if (seen_define) throw Error(ErrorKind::Unsupported, "only a single function is supported", t.line, t.col);
        seen_define = true;
        parse_function();
      } else {
        skip_line();
      }
    }
    if (!seen_define) throw Error(ErrorKind::Syntax, "missing 'define'", 1, 1);
  }

 private:
  const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw Error(ErrorKind::Syntax, msg + (t.kind == TokKind::End ? " at end of input" : " near '" + t.text + "'"),
                t.line, t.col);
  }

  bool at_punct(std::string_view p) const { return peek().kind == TokKind::Punct && peek().text == p; }
  bool at_ident(std::string_view w) const { return peek().kind == TokKind::Ident && peek().text == w; }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    next();
  }
  void expect_ident(std::string_view w) {
    if (!at_ident(w)) fail(peek(), "expected '" + std::string(w) + "'");
    next();
  }

  void skip_line() {
    const int line = peek().line;
    while (peek().kind != TokKind::End && peek().line == line) next();
  }

  static std::optional<uint32_t> int_type_width(const Token& t) {
    if (t.kind != TokKind::Ident || t.text.size() < 2 || t.text[0] != 'i') return std::nullopt;
    uint32_t w = 0;
    const char* first = t.text.data() + 1;
    const char* last = t.text.data() + t.text.size();
    auto [p, ec] = std::from_chars(first, last, w);
    if (ec != std::errc() || p != last) return std::nullopt;
    return w;
  }

  uint32_t parse_type() {
    const Token t = peek();
    if (auto w = int_type_width(t)) {
      next();
      if (at_punct("*")) throw Error(ErrorKind::Unsupported, "pointer types are not supported", t.line, t.col);
      if (*w < 1 || *w > kMaxWidth)
        throw Error(ErrorKind::Unsupported, "integer width i" + std::to_string(*w) + " is not supported", t.line, t.col);
      return *w;
    }
    if (t.kind == TokKind::Ident || at_punct("<") || at_punct("[")) {
      throw Error(ErrorKind::Unsupported, "type '" + t.text + "' is not supported", t.line, t.col);
    }
    fail(t, "expected integer type");
  }

  void parse_function() {
    expect_ident("define");
    while (peek().kind == TokKind::Ident && !int_type_width(peek()) && peek().text != "void") next();
    if (at_ident("void")) throw Error(ErrorKind::Unsupported, "main must return an integer", peek().line, peek().col);
    return_width = parse_type();
    if (peek().kind != TokKind::Global) fail(peek(), "expected function name");
    next();
    expect_punct("(");
    if (!at_punct(")")) throw Error(ErrorKind::Unsupported, "function parameters are not supported", peek().line, peek().col);
    expect_punct(")");
    while (peek().kind == TokKind::Attr || (peek().kind == TokKind::Ident && !at_punct("{"))) next();
    body_line = peek().line;
    expect_punct("{");
    while (!at_punct("}")) {
      if (peek().kind == TokKind::End) fail(peek(), "expected '}'");
      parse_block();
    }
    expect_punct("}");
  }

  void parse_block() {
    const Token lt = peek();
    if (!((lt.kind == TokKind::Ident || lt.kind == TokKind::Number) && peek(1).kind == TokKind::Punct &&
          peek(1).text == ":")) {
      fail(lt, "expected block label");
    }
    next();
    next();
    RawBlock blk;
    blk.label = lt.text;
    blk.line = lt.line;
    blk.col = lt.col;
    bool seen_non_phi = false;
    for (;;) {
      if (at_punct("}") || peek().kind == TokKind::End) {
        throw Error(ErrorKind::Syntax, "block '" + blk.label + "' has no terminator", lt.line, lt.col);
      }
      if ((peek().kind == TokKind::Ident || peek().kind == TokKind::Number) && peek(1).kind == TokKind::Punct &&
          peek(1).text == ":") {
        throw Error(ErrorKind::Syntax, "block '" + blk.label + "' has no terminator", peek().line, peek().col);
      }
      RawStmt s = parse_stmt();
      if (s.kind == RawStmt::Kind::Phi) {
        if (seen_non_phi) throw Error(ErrorKind::Syntax, "phi nodes must be at the start of a block", s.line, s.col);
      } else {
        seen_non_phi = true;
      }
      const bool term = s.kind == RawStmt::Kind::Br || s.kind == RawStmt::Kind::CondBr ||
                        s.kind == RawStmt::Kind::Ret || s.kind == RawStmt::Kind::Unreachable;
      blk.stmts.push_back(std::move(s));
      if (term) break;
    }
    blocks.push_back(std::move(blk));
  }

  RawOperand parse_value() {
    const Token t = next();
    RawOperand o;
    o.line = t.line;
    o.col = t.col;
    if (t.kind == TokKind::Local) {
      o.is_reg = true;
      o.name = t.text;
    } else if (t.kind == TokKind::Number) {
      const bool neg = t.text[0] == '-';
      const std::string_view digits = std::string_view(t.text).substr(neg ? 1 : 0);
      uint64_t mag = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), mag);
      if (ec != std::errc() || p != digits.data() + digits.size()) {
        throw Error(ErrorKind::Syntax, "integer literal out of range: " + t.text, t.line, t.col);
      }
      o.value = neg ? (~mag + 1) : mag;
    } else if (t.kind == TokKind::Ident && (t.text == "true" || t.text == "false")) {
      o.value = t.text == "true" ? 1 : 0;
    } else if (t.kind == TokKind::Ident && (t.text == "undef" || t.text == "poison" || t.text == "null")) {
      throw Error(ErrorKind::Unsupported, "'" + t.text + "' values are not supported", t.line, t.col);
    } else {
      fail(t, "expected value");
    }
    return o;
  }

  RawLabelRef parse_label_ref() {
    expect_ident("label");
    const Token t = next();
    if (t.kind != TokKind::Local) fail(t, "expected label name");
    return {t.text, t.line, t.col};
  }

  void skip_trailing_attrs() {
    while (peek().kind == TokKind::Attr) next();
  }

  RawStmt parse_call(const Token& start) {
    while (at_ident("tail") || at_ident("notail") || at_ident("musttail")) next();
    expect_ident("call");
    if (!at_ident("void")) {
      throw Error(ErrorKind::Unsupported, "only calls to void verifier intrinsics are supported", start.line,
                  start.col);
    }
    next();
    const Token callee = next();
    if (callee.kind != TokKind::Global) {
      throw Error(ErrorKind::Unsupported, "indirect or cast calls are not supported", callee.line, callee.col);
    }
    RawStmt s;
    s.kind = RawStmt::Kind::Call;
    s.line = start.line;
    s.col = start.col;
    if (callee.text == "__VERIFIER_assume") {
      s.fn = Intrinsic::Assume;
    } else if (callee.text == "__VERIFIER_assert") {
      s.fn = Intrinsic::Assert;
    } else if (callee.text == "__VERIFIER_error") {
      s.fn = Intrinsic::Error;
    } else {
      throw Error(ErrorKind::Unsupported, "call to unsupported function @" + callee.text, callee.line, callee.col);
    }
    expect_punct("(");
    if (!at_punct(")")) {
      s.width = parse_type();
      s.ops.push_back(parse_value());
    }
    expect_punct(")");
    skip_trailing_attrs();
    const bool wants_arg = s.fn != Intrinsic::Error;
    if (wants_arg != (s.ops.size() == 1)) {
      throw Error(ErrorKind::Syntax, "wrong number of arguments to @" + callee.text, callee.line, callee.col);
    }
    return s;
  }

  RawStmt parse_stmt() {
    const Token start = peek();
    if (start.kind == TokKind::Local && peek(1).kind == TokKind::Punct && peek(1).text == "=") {
      next();
      next();
      RawStmt s = parse_rhs(start);
      s.dest = start.text;
      return s;
    }
    if (start.kind != TokKind::Ident) fail(start, "expected instruction");
    const std::string& op = start.text;
    if (op == "call" || op == "tail" || op == "notail" || op == "musttail") return parse_call(start);
    RawStmt s;
    s.line = start.line;
    s.col = start.col;
    if (op == "br") {
      next();
      if (at_ident("label")) {
        s.kind = RawStmt::Kind::Br;
        s.labels.push_back(parse_label_ref());
      } else {
        s.kind = RawStmt::Kind::CondBr;
        s.width = parse_type();
        s.ops.push_back(parse_value());
        expect_punct(",");
        s.labels.push_back(parse_label_ref());
        expect_punct(",");
        s.labels.push_back(parse_label_ref());
      }
      return s;
    }
    if (op == "ret") {
      next();
      if (at_ident("void")) throw Error(ErrorKind::Unsupported, "ret void is not supported", start.line, start.col);
      s.kind = RawStmt::Kind::Ret;
      s.width = parse_type();
      s.ops.push_back(parse_value());
      return s;
    }
    if (op == "unreachable") {
      next();
      s.kind = RawStmt::Kind::Unreachable;
      return s;
    }
    if (is_known_unsupported(op)) {
      throw Error(ErrorKind::Unsupported, "instruction '" + op + "' is not supported", start.line, start.col);
    }
    fail(start, "unknown instruction");
  }

  RawStmt parse_rhs(const Token& start) {
    const Token opt = peek();
    RawStmt s;
    s.line = start.line;
    s.col = start.col;
    if (opt.kind != TokKind::Ident) fail(opt, "expected opcode");
    const std::string op = opt.text;
    if (auto it = binop_table().find(op); it != binop_table().end()) {
      next();
      s.kind = RawStmt::Kind::BinOp;
      s.binop = it->second;
      for (;;) {
        if (at_ident("nsw")) {
          s.nsw = true;
        } else if (at_ident("nuw")) {
          s.nuw = true;
        } else if (at_ident("exact")) {
          s.exact = true;
        } else {
          break;
        }
        next();
      }
      s.width = parse_type();
      s.ops.push_back(parse_value());
      expect_punct(",");
      s.ops.push_back(parse_value());
      return s;
    }
    if (op == "icmp") {
      next();
      s.kind = RawStmt::Kind::ICmp;
      const Token pt = next();
      auto it = pred_table().find(pt.text);
      if (pt.kind != TokKind::Ident || it == pred_table().end()) fail(pt, "expected icmp predicate");
      s.pred = it->second;
      s.width = parse_type();
      s.ops.push_back(parse_value());
      expect_punct(",");
      s.ops.push_back(parse_value());
      return s;
    }
    if (op == "zext" || op == "sext") {
      next();
      s.kind = RawStmt::Kind::Ext;
      s.is_signed = op == "sext";
      s.width = parse_type();
      s.ops.push_back(parse_value());
      expect_ident("to");
      s.to_width = parse_type();
      return s;
    }
    if (op == "select") {
      next();
      s.kind = RawStmt::Kind::Select;
      const uint32_t cw = parse_type();
      if (cw != 1) throw Error(ErrorKind::WidthMismatch, "select condition must be i1", opt.line, opt.col);
      s.ops.push_back(parse_value());
      expect_punct(",");
      s.width = parse_type();
      s.ops.push_back(parse_value());
      expect_punct(",");
      if (parse_type() != s.width) throw Error(ErrorKind::WidthMismatch, "select arms differ in width", opt.line, opt.col);
      s.ops.push_back(parse_value());
      return s;
    }
    if (op == "phi") {
      next();
      s.kind = RawStmt::Kind::Phi;
      s.width = parse_type();
      do {
        expect_punct("[");
        s.ops.push_back(parse_value());
        expect_punct(",");
        const Token lt = next();
        if (lt.kind != TokKind::Local) fail(lt, "expected incoming block");
        s.labels.push_back({lt.text, lt.line, lt.col});
        expect_punct("]");
      } while (at_punct(",") && (next(), true));
      return s;
    }
    if (op == "call" || op == "tail") {
      throw Error(ErrorKind::Unsupported, "calls returning values are not supported", opt.line, opt.col);
    }
    if (is_known_unsupported(op)) {
      throw Error(ErrorKind::Unsupported, "instruction '" + op + "' is not supported", opt.line, opt.col);
    }
    fail(opt, "unknown instruction");
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

// Dominator sets for blocks reachable from the entry; unreachable blocks get
// an empty set.
inline std::vector<std::vector<bool>> dominators(const Program& p) {
  const size_t n = p.blocks.size();
  std::vector<bool> reachable(n, false);
  std::vector<BlockId> stack{p.entry};
  reachable[p.entry] = true;
  while (!stack.empty()) {
    const BlockId b = stack.back();
    stack.pop_back();
    for (BlockId s : successors(p.blocks[b])) {
      if (!reachable[s]) {
        reachable[s] = true;
        stack.push_back(s);
      }
    }
  }
  const auto preds = predecessors(p);
  std::vector<std::vector<bool>> dom(n);
  for (BlockId b = 0; b < n; ++b) {
    if (reachable[b]) dom[b].assign(n, b != p.entry);
  }
  dom[p.entry][p.entry] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (BlockId b = 0; b < n; ++b) {
      if (!reachable[b] || b == p.entry) continue;
      std::vector<bool> next(n, true);
      for (BlockId q : preds[b]) {
        if (!reachable[q]) continue;
        for (size_t k = 0; k < n; ++k) next[k] = next[k] && dom[q][k];
      }
      next[b] = true;
      if (next != dom[b]) {
        dom[b] = std::move(next);
        changed = true;
      }
    }
  }
  return dom;
}

class Resolver {
 public:
  Resolver(const RawParser& raw) : raw_(raw) {}

  Program run() {
    Program p;
    p.return_width = raw_.return_width;
    if (raw_.blocks.empty()) throw Error(ErrorKind::Syntax, "function has no blocks", raw_.body_line, 1);
    for (const RawBlock& rb : raw_.blocks) {
      if (labels_.count(rb.label)) throw Error(ErrorKind::Syntax, "duplicate label '" + rb.label + "'", rb.line, rb.col);
      labels_[rb.label] = static_cast<BlockId>(p.blocks.size());
      p.blocks.push_back(Block{rb.label, {}, {}, Unreachable{}});
    }
    // Definitions first so forward references (phi back edges) resolve.
    for (BlockId b = 0; b < raw_.blocks.size(); ++b) {
      for (const RawStmt& s : raw_.blocks[b].stmts) {
        if (s.dest.empty()) continue;
        if (regs_.count(s.dest)) {
          throw Error(ErrorKind::DuplicateRegister, "register %" + s.dest + " is assigned more than once", s.line,
                      s.col);
        }
        regs_[s.dest] = static_cast<RegId>(p.registers.size());
        p.registers.push_back(Register{s.dest, result_width(s), b});
      }
    }
    program_ = &p;
    for (BlockId b = 0; b < raw_.blocks.size(); ++b) {
      for (const RawStmt& s : raw_.blocks[b].stmts) lower(s, p.blocks[b]);
    }
    check_structure(p);
    return p;
  }

 private:
  static uint32_t result_width(const RawStmt& s) {
    switch (s.kind) {
      case RawStmt::Kind::ICmp: return 1;
      case RawStmt::Kind::Ext: return s.to_width;
      default: return s.width;
    }
  }

  Operand operand(const RawOperand& o, uint32_t width) const {
    if (!o.is_reg) return Operand::of_const(o.value & width_mask(width));
    auto it = regs_.find(o.name);
    if (it == regs_.end()) throw Error(ErrorKind::SsaViolation, "use of undefined register %" + o.name, o.line, o.col);
    const uint32_t actual = program_->registers[it->second].width;
    if (actual != width) {
      throw Error(ErrorKind::WidthMismatch,
                  "register %" + o.name + " has width i" + std::to_string(actual) + ", expected i" + std::to_string(width),
                  o.line, o.col);
    }
    return Operand::of_reg(it->second);
  }

  BlockId label(const RawLabelRef& l) const {
    auto it = labels_.find(l.name);
    if (it == labels_.end()) throw Error(ErrorKind::UnknownLabel, "unknown label %" + l.name, l.line, l.col);
    return it->second;
  }

  RegId dest(const RawStmt& s) const { return regs_.at(s.dest); }

  void lower(const RawStmt& s, Block& blk) const {
    switch (s.kind) {
      case RawStmt::Kind::BinOp:
        blk.body.push_back(BinOp{s.binop, s.nsw, s.nuw, s.exact, s.width, operand(s.ops[0], s.width),
                                 operand(s.ops[1], s.width), dest(s)});
        break;
      case RawStmt::Kind::ICmp:
        blk.body.push_back(ICmp{s.pred, s.width, operand(s.ops[0], s.width), operand(s.ops[1], s.width), dest(s)});
        break;
      case RawStmt::Kind::Ext:
        if (s.to_width <= s.width) {
          throw Error(ErrorKind::WidthMismatch, "extension must widen its operand", s.line, s.col);
        }
        blk.body.push_back(Ext{s.is_signed, s.width, s.to_width, operand(s.ops[0], s.width), dest(s)});
        break;
      case RawStmt::Kind::Select:
        blk.body.push_back(Select{operand(s.ops[0], 1), s.width, operand(s.ops[1], s.width),
                                  operand(s.ops[2], s.width), dest(s)});
        break;
      case RawStmt::Kind::Phi: {
        Phi phi{dest(s), s.width, {}};
        for (size_t k = 0; k < s.ops.size(); ++k) phi.incoming.emplace_back(operand(s.ops[k], s.width), label(s.labels[k]));
        blk.phis.push_back(std::move(phi));
        break;
      }
      case RawStmt::Kind::Call:
        blk.body.push_back(Call{s.fn, s.width, s.ops.empty() ? Operand{} : operand(s.ops[0], s.width)});
        break;
      case RawStmt::Kind::Br:
        blk.term = BrUncond{label(s.labels[0])};
        break;
      case RawStmt::Kind::CondBr:
        if (s.width != 1) throw Error(ErrorKind::WidthMismatch, "branch condition must be i1", s.line, s.col);
        blk.term = BrCond{operand(s.ops[0], 1), label(s.labels[0]), label(s.labels[1])};
        break;
      case RawStmt::Kind::Ret:
        if (s.width != program_->return_width) {
          throw Error(ErrorKind::WidthMismatch, "return width does not match the function type", s.line, s.col);
        }
        blk.term = Ret{s.width, operand(s.ops[0], s.width)};
        break;
      case RawStmt::Kind::Unreachable:
        blk.term = Unreachable{};
        break;
    }
  }

  const RawStmt* stmt_defining(RegId r) const {
    const Register& reg = program_->registers[r];
    for (const RawStmt& s : raw_.blocks[reg.block].stmts) {
      if (s.dest == reg.name) return &s;
    }
    return nullptr;
  }

  void check_structure(const Program& p) const {
    const RawBlock& entry_raw = raw_.blocks[p.entry];
    if (!p.blocks[p.entry].phis.empty()) {
      throw Error(ErrorKind::SsaViolation, "entry block must not contain phi nodes", entry_raw.line, entry_raw.col);
    }
    const auto preds = predecessors(p);
    for (BlockId b = 0; b < p.blocks.size(); ++b) {
      for (const Phi& phi : p.blocks[b].phis) {
        std::vector<BlockId> in;
        for (const auto& inc : phi.incoming) in.push_back(inc.second);
        std::sort(in.begin(), in.end());
        if (std::adjacent_find(in.begin(), in.end()) != in.end() || in != preds[b]) {
          const RawStmt* s = stmt_defining(phi.dest);
          throw Error(ErrorKind::SsaViolation,
                      "phi %" + p.registers[phi.dest].name + " incoming blocks do not match the predecessors of '" +
                          p.blocks[b].label + "'",
                      s ? s->line : 0, s ? s->col : 0);
        }
      }
    }

    const auto dom = dominators(p);
    // Position of each register definition inside its block: phis count as
    // position -1, body instructions by index.
    std::vector<int> def_pos(p.registers.size(), -1);
    for (BlockId b = 0; b < p.blocks.size(); ++b) {
      for (size_t i = 0; i < p.blocks[b].body.size(); ++i) {
        if (auto d = defined_register(p.blocks[b].body[i])) def_pos[*d] = static_cast<int>(i);
      }
    }
    auto fail_use = [&](RegId r, BlockId b) {
      const RawBlock& rb = raw_.blocks[b];
      throw Error(ErrorKind::SsaViolation,
                  "use of %" + p.registers[r].name + " in '" + p.blocks[b].label + "' is not dominated by its definition",
                  rb.line, rb.col);
    };
    auto check_use = [&](const Operand& o, BlockId b, int pos) {
      if (!o.is_reg() || dom[b].empty()) return;
      const BlockId d = p.registers[o.reg].block;
      if (d == b) {
        if (def_pos[o.reg] >= pos) fail_use(o.reg, b);
      } else if (!dom[b][d]) {
        fail_use(o.reg, b);
      }
    };
    for (BlockId b = 0; b < p.blocks.size(); ++b) {
      const Block& blk = p.blocks[b];
      for (size_t i = 0; i < blk.body.size(); ++i) {
        for (const Operand& o : used_operands(blk.body[i])) check_use(o, b, static_cast<int>(i));
      }
      for (const Operand& o : used_operands(blk.term)) check_use(o, b, static_cast<int>(blk.body.size()));
      for (const Phi& phi : blk.phis) {
        for (const auto& [o, from] : phi.incoming) {
          if (!o.is_reg() || dom[from].empty()) continue;
          const BlockId d = p.registers[o.reg].block;
          if (!dom[from][d]) fail_use(o.reg, b);
        }
      }
    }
  }

  const RawParser& raw_;
  const Program* program_ = nullptr;
  std::map<std::string, BlockId> labels_;
  std::map<std::string, RegId> regs_;
};

}  // namespace detail

inline Program parse(std::string_view text) {
  detail::RawParser raw(detail::Lexer(text).run());
  raw.parse_module();
  return detail::Resolver(raw).run();
}

inline Program parse(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(std::string_view(text));
}

}  // namespace bvreach::mir
