#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace icsrange::plc {

/// Syntax error with a 1-based source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UndefinedReference : public std::runtime_error {
 public:
  explicit UndefinedReference(std::string name)
      : std::runtime_error("undefined reference '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

enum class BinaryOp { add, sub, mul, div, lt, le, gt, ge, eq, ne, logical_and, logical_or };
enum class UnaryOp { negate, logical_not };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct NumberLit {
  double value;
};
struct Ref {
  std::string name;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
/// DELTA(x), BALANCE(level, inflow, outflow, area), ABS, MIN, MAX.
struct Call {
  std::string function;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<NumberLit, Ref, Unary, Binary, Call> node;
  std::size_t line = 0;
  std::size_t column = 0;
};

bool is_comparison(BinaryOp op);

/// Per-call-site memory for the history functions.
struct CallState {
  std::optional<double> previous;   // DELTA
  std::optional<double> predicted;  // BALANCE
};

/// Evaluation environment for one scan.
class EvalContext {
 public:
  using Lookup = std::function<std::optional<double>(std::string_view)>;

  EvalContext(Lookup lookup, double scan_period,
              std::unordered_map<const Expr*, CallState>* history)
      : lookup_(std::move(lookup)), scan_period_(scan_period), history_(history) {}

  double value_of(std::string_view name) const;
  double scan_period() const { return scan_period_; }
  CallState& state_for(const Expr* site);

 private:
  Lookup lookup_;
  double scan_period_;
  std::unordered_map<const Expr*, CallState>* history_;
};

/// Numeric evaluation; comparisons and logic yield 1.0 / 0.0.
double evaluate(const Expr& expr, EvalContext& ctx);

/// Collects every identifier referenced by an expression.
void collect_refs(const Expr& expr, std::vector<std::string>& out);

struct SetAction {
  std::string tag;
  ExprPtr value;
};
struct CmdAction {
  std::string target;
  std::string command;
};
using Action = std::variant<SetAction, CmdAction>;

struct Rung {
  ExprPtr condition;
  std::vector<Action> actions;
  std::size_t line = 0;
};

struct ControlProgram {
  std::vector<Rung> rungs;
  std::map<std::string, double, std::less<>> setpoints;
};

/// Grammar (UTF-8, `;`-terminated statements, `#` comments):
///   SETPOINT <name> = <number>;
///   RUNG <expr> THEN <action> {, <action>};
///   action := SET <tag> = <expr> | CMD <target> <word>
ControlProgram parse_program(std::string_view source);

enum class InvariantKind { state_agnostic, state_dependent };

struct InvariantRule {
  std::string id;
  InvariantKind kind = InvariantKind::state_agnostic;
  ExprPtr guard;  // null for SA
  ExprPtr relation;
  int window = 1;
  double tolerance = 0.0;
  std::size_t line = 0;
};

/// One rule per line: `SA|SD <guard>? :: <relation> WINDOW n TOL x`.
/// Rules are numbered R1, R2, ... in file order.
std::vector<InvariantRule> parse_invariants(std::string_view source);

/// A comparison relation holds within the tolerance slack; any other
/// expression is a residual that must stay within +-tolerance.
bool relation_holds(const InvariantRule& rule, EvalContext& ctx);

}  // namespace icsrange::plc
