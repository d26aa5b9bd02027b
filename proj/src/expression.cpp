/*
 Copyright 2026 The limco Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "limco/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace limco::expr {

// ---------------------------------------------------------------------------
// SymbolTable

void SymbolTable::add_variable(std::string name, int slot) {
  variables_[std::move(name)] = slot;
  slot_count_ = std::max(slot_count_, slot + 1);
}

void SymbolTable::add_constant(std::string name, double value) {
  constants_[std::move(name)] = value;
}

SymbolTable SymbolTable::for_problem(int state_dim, int control_dim,
                                     const std::map<std::string, double>& params) {
  SymbolTable table;
  for (int i = 0; i < state_dim; ++i) table.add_variable("x" + std::to_string(i + 1), i);
  for (int i = 0; i < control_dim; ++i)
    table.add_variable("u" + std::to_string(i + 1), state_dim + i);
  table.add_variable("t", state_dim + control_dim);
  for (const auto& [name, value] : params) table.add_constant(name, value);
  return table;
}

std::optional<int> SymbolTable::slot(std::string_view name) const {
  auto it = variables_.find(name);
  if (it == variables_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> SymbolTable::constant(std::string_view name) const {
  auto it = constants_.find(name);
  if (it == constants_.end()) return std::nullopt;
  return it->second;
}

std::string SymbolTable::slot_name(int slot) const {
  for (const auto& [name, s] : variables_)
    if (s == slot) return name;
  return "$" + std::to_string(slot);
}

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, std::string message,
                       std::vector<std::string> expected)
    : std::runtime_error(std::move(message)),
      kind_(kind),
      offset_(offset),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Tree

namespace detail {

enum class Op { kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow, kExp, kLog, kSin, kCos, kTanh };

struct Node {
  Op op = Op::kConst;
  double value = 0.0;
  int slot = -1;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

}  // namespace detail

namespace {

using detail::Node;
using detail::Op;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConst;
  n->value = v;
  return n;
}

NodePtr make_var(int slot) {
  auto n = std::make_shared<Node>();
  n->op = Op::kVar;
  n->slot = slot;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::kConst && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::kConst; }

double apply_unary(Op op, double x) {
  switch (op) {
    case Op::kNeg: return -x;
    case Op::kExp: return std::exp(x);
    case Op::kLog: return std::log(x);
    case Op::kSin: return std::sin(x);
    case Op::kCos: return std::cos(x);
    case Op::kTanh: return std::tanh(x);
    default: return 0.0;
  }
}

double apply_binary(Op op, double x, double y) {
  switch (op) {
    case Op::kAdd: return x + y;
    case Op::kSub: return x - y;
    case Op::kMul: return x * y;
    case Op::kDiv: return x / y;
    case Op::kPow: return std::pow(x, y);
    default: return 0.0;
  }
}

NodePtr make_unary(Op op, NodePtr a) {
  if (is_const(a)) return make_const(apply_unary(op, a->value));
  if (op == Op::kNeg && a->op == Op::kNeg) return a->a;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(apply_binary(op, a->value, b->value));
  switch (op) {
    case Op::kAdd:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::kSub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::kNeg, b);
      break;
    case Op::kMul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::kDiv:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::kPow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr add(NodePtr a, NodePtr b) { return make_binary(Op::kAdd, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return make_binary(Op::kSub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return make_binary(Op::kMul, std::move(a), std::move(b)); }
NodePtr div(NodePtr a, NodePtr b) { return make_binary(Op::kDiv, std::move(a), std::move(b)); }

double eval(const Node& n, std::span<const double> slots) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return slots[static_cast<std::size_t>(n.slot)];
    case Op::kNeg:
    case Op::kExp:
    case Op::kLog:
    case Op::kSin:
    case Op::kCos:
    case Op::kTanh: return apply_unary(n.op, eval(*n.a, slots));
    default: return apply_binary(n.op, eval(*n.a, slots), eval(*n.b, slots));
  }
}

NodePtr differentiate(const NodePtr& n, int slot) {
  switch (n->op) {
    case Op::kConst: return make_const(0.0);
    case Op::kVar: return make_const(n->slot == slot ? 1.0 : 0.0);
    case Op::kNeg: return make_unary(Op::kNeg, differentiate(n->a, slot));
    case Op::kAdd: return add(differentiate(n->a, slot), differentiate(n->b, slot));
    case Op::kSub: return sub(differentiate(n->a, slot), differentiate(n->b, slot));
    case Op::kMul:
      return add(mul(differentiate(n->a, slot), n->b), mul(n->a, differentiate(n->b, slot)));
    case Op::kDiv: {
      // (a/b)' = a'/b - a b' / b^2
      auto da = differentiate(n->a, slot);
      auto db = differentiate(n->b, slot);
      return sub(div(da, n->b), div(mul(n->a, db), mul(n->b, n->b)));
    }
    case Op::kPow: {
      auto da = differentiate(n->a, slot);
      if (is_const(n->b)) {
        const double c = n->b->value;
        return mul(mul(make_const(c), make_binary(Op::kPow, n->a, make_const(c - 1.0))), da);
      }
      auto db = differentiate(n->b, slot);
      // (a^b)' = a^b (b' log a + b a' / a)
      auto inner = add(mul(db, make_unary(Op::kLog, n->a)), div(mul(n->b, da), n->a));
      return mul(n, inner);
    }
    case Op::kExp: return mul(n, differentiate(n->a, slot));
    case Op::kLog: return div(differentiate(n->a, slot), n->a);
    case Op::kSin: return mul(make_unary(Op::kCos, n->a), differentiate(n->a, slot));
    case Op::kCos:
      return mul(make_unary(Op::kNeg, make_unary(Op::kSin, n->a)), differentiate(n->a, slot));
    case Op::kTanh: {
      auto th = make_unary(Op::kTanh, n->a);
      return mul(sub(make_const(1.0), mul(th, th)), differentiate(n->a, slot));
    }
  }
  return make_const(0.0);
}

int max_slot_of(const Node& n) {
  int m = n.op == Op::kVar ? n.slot : -1;
  if (n.a) m = std::max(m, max_slot_of(*n.a));
  if (n.b) m = std::max(m, max_slot_of(*n.b));
  return m;
}

std::size_t count_nodes(const Node& n) {
  return 1 + (n.a ? count_nodes(*n.a) : 0) + (n.b ? count_nodes(*n.b) : 0);
}

const char* function_name(Op op) {
  switch (op) {
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTanh: return "tanh";
    default: return "?";
  }
}

void print(const Node& n, const SymbolTable* symbols, std::ostream& os) {
  switch (n.op) {
    case Op::kConst: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      os << (n.value < 0 ? "(" + tmp.str() + ")" : tmp.str());
      return;
    }
    case Op::kVar:
      os << (symbols ? symbols->slot_name(n.slot) : "$" + std::to_string(n.slot));
      return;
    case Op::kNeg:
      os << "(-";
      print(*n.a, symbols, os);
      os << ")";
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow: {
      static constexpr char kSymbols[] = {'+', '-', '*', '/', '^'};
      const char sym = kSymbols[static_cast<int>(n.op) - static_cast<int>(Op::kAdd)];
      os << "(";
      print(*n.a, symbols, os);
      os << sym;
      print(*n.b, symbols, os);
      os << ")";
      return;
    }
    default:
      os << function_name(n.op) << "(";
      print(*n.a, symbols, os);
      os << ")";
      return;
  }
}

// ---------------------------------------------------------------------------
// Parser

enum class Tok { kNumber, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kComma, kEnd };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string text;
  double number = 0.0;
};

const std::vector<std::string>& operand_start() {
  static const std::vector<std::string> kSet = {"number", "identifier", "'('", "'-'", "'+'"};
  return kSet;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) return {Tok::kEnd, start, ""};
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      return {Tok::kIdent, start, std::string(src_.substr(start, pos_ - start))};
    }
    ++pos_;
    switch (c) {
      case '+': return {Tok::kPlus, start, "+"};
      case '-': return {Tok::kMinus, start, "-"};
      case '*': return {Tok::kStar, start, "*"};
      case '/': return {Tok::kSlash, start, "/"};
      case '^': return {Tok::kCaret, start, "^"};
      case '(': return {Tok::kLParen, start, "("};
      case ')': return {Tok::kRParen, start, ")"};
      case ',': return {Tok::kComma, start, ","};
      default:
        throw ParseError(ParseErrorKind::kSyntax, start,
                         "syntax error at offset " + std::to_string(start) +
                             ": unexpected character '" + std::string(1, c) + "'",
                         operand_start());
    }
  }

 private:
  Token number(std::size_t start) {
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0)
      throw ParseError(ParseErrorKind::kSyntax, start,
                       "syntax error at offset " + std::to_string(start) + ": malformed number",
                       {"digit"});
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // "2e" is the number 2 followed by identifier e
    }
    std::string text(src_.substr(start, pos_ - start));
    return {Tok::kNumber, start, text, std::strtod(text.c_str(), nullptr)};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::optional<Op> lookup_function(std::string_view name) {
  if (name == "exp") return Op::kExp;
  if (name == "log") return Op::kLog;
  if (name == "sin") return Op::kSin;
  if (name == "cos") return Op::kCos;
  if (name == "tanh") return Op::kTanh;
  return std::nullopt;
}

std::string describe(const Token& t) {
  return t.kind == Tok::kEnd ? std::string("end of input") : "'" + t.text + "'";
}

class Parser {
 public:
  Parser(std::string_view src, const SymbolTable& symbols) : lexer_(src), symbols_(symbols) {
    advance();
  }

  NodePtr parse() {
    NodePtr e = expr();
    if (cur_.kind != Tok::kEnd) fail(cur_, {"operator", "end of input"});
    return e;
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  [[noreturn]] void fail(const Token& at, std::vector<std::string> expected) {
    std::string msg = "syntax error at offset " + std::to_string(at.offset) + ": unexpected " +
                      describe(at) + ", expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
    msg += "}";
    throw ParseError(ParseErrorKind::kSyntax, at.offset, msg, std::move(expected));
  }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(cur_, {what});
    advance();
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (cur_.kind == Tok::kPlus || cur_.kind == Tok::kMinus) {
      const Op op = cur_.kind == Tok::kPlus ? Op::kAdd : Op::kSub;
      advance();
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (cur_.kind == Tok::kStar || cur_.kind == Tok::kSlash) {
      const Op op = cur_.kind == Tok::kStar ? Op::kMul : Op::kDiv;
      advance();
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  NodePtr unary() {
    if (cur_.kind == Tok::kMinus) {
      advance();
      return make_unary(Op::kNeg, unary());
    }
    if (cur_.kind == Tok::kPlus) {
      advance();
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (cur_.kind == Tok::kCaret) {
      advance();
      return make_binary(Op::kPow, base, unary());
    }
    return base;
  }

  NodePtr primary() {
    const Token tok = cur_;
    switch (tok.kind) {
      case Tok::kNumber:
        advance();
        return make_const(tok.number);
      case Tok::kLParen: {
        advance();
        NodePtr inner = expr();
        expect(Tok::kRParen, "')'");
        return inner;
      }
      case Tok::kIdent:
        advance();
        if (auto fn = lookup_function(tok.text)) return call(tok, *fn);
        if (cur_.kind == Tok::kLParen)
          throw ParseError(ParseErrorKind::kUnknownIdentifier, tok.offset,
                           "unknown function '" + tok.text + "' at offset " +
                               std::to_string(tok.offset));
        if (auto slot = symbols_.slot(tok.text)) return make_var(*slot);
        if (auto value = symbols_.constant(tok.text)) return make_const(*value);
        throw ParseError(ParseErrorKind::kUnknownIdentifier, tok.offset,
                         "unknown identifier '" + tok.text + "' at offset " +
                             std::to_string(tok.offset));
      default:
        fail(tok, operand_start());
    }
  }

  NodePtr call(const Token& name, Op fn) {
    expect(Tok::kLParen, "'('");
    std::vector<NodePtr> args;
    if (cur_.kind != Tok::kRParen) {
      args.push_back(expr());
      while (cur_.kind == Tok::kComma) {
        advance();
        args.push_back(expr());
      }
    }
    expect(Tok::kRParen, "')'");
    if (args.size() != 1)
      throw ParseError(ParseErrorKind::kArity, name.offset,
                       "function '" + name.text + "' takes 1 argument, got " +
                           std::to_string(args.size()) + " at offset " +
                           std::to_string(name.offset));
    return make_unary(fn, args.front());
  }

  Lexer lexer_;
  const SymbolTable& symbols_;
  Token cur_{Tok::kEnd, 0, ""};
};

}  // namespace

// ---------------------------------------------------------------------------
// Expression

Expression::Expression() : root_(make_const(0.0)) {}
Expression::Expression(std::shared_ptr<const detail::Node> root) : root_(std::move(root)) {}

Expression Expression::parse(std::string_view source, const SymbolTable& symbols) {
  return Expression(Parser(source, symbols).parse());
}

Expression Expression::constant(double value) { return Expression(make_const(value)); }

double Expression::evaluate(std::span<const double> slots) const { return eval(*root_, slots); }

Expression Expression::derivative(int slot) const {
  return Expression(differentiate(root_, slot));
}

std::optional<double> Expression::constant_value() const {
  if (root_->op == Op::kConst) return root_->value;
  return std::nullopt;
}

int Expression::max_slot() const { return max_slot_of(*root_); }
std::size_t Expression::node_count() const { return count_nodes(*root_); }

std::string Expression::to_string(const SymbolTable* symbols) const {
  std::ostringstream os;
  print(*root_, symbols, os);
  return os.str();
}

}  // namespace limco::expr
