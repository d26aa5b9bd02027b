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

#ifndef LIMCO_EXPRESSION_HPP
#define LIMCO_EXPRESSION_HPP

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace limco::expr {

/// Maps identifiers to evaluation slots (variables) or to fixed values
/// (named parameters, folded into the tree at parse time).
class SymbolTable {
 public:
  void add_variable(std::string name, int slot);
  void add_constant(std::string name, double value);

  /// x1..xm -> slots 0..m-1, u1..uk -> m..m+k-1, t -> m+k.
  static SymbolTable for_problem(int state_dim, int control_dim,
                                 const std::map<std::string, double>& params = {});

  std::optional<int> slot(std::string_view name) const;
  std::optional<double> constant(std::string_view name) const;
  int slot_count() const { return slot_count_; }
  std::string slot_name(int slot) const;

 private:
  std::map<std::string, int, std::less<>> variables_;
  std::map<std::string, double, std::less<>> constants_;
  int slot_count_ = 0;
};

enum class ParseErrorKind { kSyntax, kUnknownIdentifier, kArity };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, std::string message,
             std::vector<std::string> expected = {});

  ParseErrorKind kind() const { return kind_; }
  /// Byte offset into the source where the problem was detected.
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
  std::vector<std::string> expected_;
};

namespace detail {
struct Node;
}

/// Immutable expression tree over numeric slots. Grammar:
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          (right associative)
///   primary := number | identifier | func '(' expr ')' | '(' expr ')'
///   func    := exp | log | sin | cos | tanh
///
/// Copies share the tree; all members are safe to call concurrently.
class Expression {
 public:
  Expression();  // the constant 0

  static Expression parse(std::string_view source, const SymbolTable& symbols);
  static Expression constant(double value);

  double evaluate(std::span<const double> slots) const;

  /// Exact partial derivative with respect to `slot`, lightly simplified.
  Expression derivative(int slot) const;

  std::optional<double> constant_value() const;
  /// Highest slot index referenced, or -1 for constant trees.
  int max_slot() const;
  std::size_t node_count() const;
  std::string to_string(const SymbolTable* symbols = nullptr) const;

 private:
  explicit Expression(std::shared_ptr<const detail::Node> root);
  std::shared_ptr<const detail::Node> root_;
};

}  // namespace limco::expr

#endif  // LIMCO_EXPRESSION_HPP
