#include "icsrange/plc/program.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace icsrange::plc {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { ident, number, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
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
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::ident;
        t.text = read_ident();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::number;
        t.text = read_number();
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (ec != std::errc() || p != t.text.data() + t.text.size()) {
          throw ParseError(t.line, t.column, "malformed number '" + t.text + "'");
        }
      } else {
        t.kind = Tok::symbol;
        t.text = read_symbol(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
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
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string read_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
    // NAME:instance, but not the `::` separator.
    if (pos_ + 1 < src_.size() && src_[pos_] == ':' && ident_char(src_[pos_ + 1])) {
      advance();
      while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string read_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string read_symbol(const Token& t) {
    static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "::"};
    for (auto s : two) {
      if (src_.substr(pos_, 2) == s) {
        advance();
        advance();
        return std::string(s);
      }
    }
    char c = src_[pos_];
    if (std::string_view("()<>=+-*/,;").find(c) != std::string_view::npos) {
      advance();
      return std::string(1, c);
    }
    throw ParseError(t.line, t.column, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

bool is_keyword(std::string_view s) {
  static constexpr std::string_view kw[] = {"SETPOINT", "RUNG", "THEN", "SET", "CMD", "AND",
                                            "OR",       "NOT",  "SA",   "SD",  "WINDOW", "TOL"};
  return std::find(std::begin(kw), std::end(kw), s) != std::end(kw);
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(i_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Tok::end; }
  const Token& take() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    return t;
  }
  bool is_symbol(std::string_view s) const { return peek().kind == Tok::symbol && peek().text == s; }
  bool is_word(std::string_view s) const { return peek().kind == Tok::ident && peek().text == s; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.column, msg);
  }

  std::string describe(const Token& t) const {
    return t.kind == Tok::end ? std::string("end of input") : "'" + t.text + "'";
  }

  const Token& expect_symbol(std::string_view s) {
    if (!is_symbol(s)) fail(peek(), "expected '" + std::string(s) + "', found " + describe(peek()));
    return take();
  }
  void expect_word(std::string_view s) {
    if (!is_word(s)) fail(peek(), "expected " + std::string(s) + ", found " + describe(peek()));
    take();
  }
  std::string expect_name(const char* what) {
    if (peek().kind != Tok::ident || is_keyword(peek().text)) {
      fail(peek(), std::string("expected ") + what + ", found " + describe(peek()));
    }
    return take().text;
  }

  double expect_signed_number() {
    bool neg = false;
    if (is_symbol("-")) {
      take();
      neg = true;
    }
    if (peek().kind != Tok::number) fail(peek(), "expected number, found " + describe(peek()));
    double v = take().number;
    return neg ? -v : v;
  }

  // expr := or
  ExprPtr expression() { return parse_or(); }

 private:
  static ExprPtr make(const Token& at, decltype(Expr::node) node) {
    auto e = std::make_shared<Expr>();
    e->node = std::move(node);
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  ExprPtr operand_after(const Token& op, ExprPtr (Parser::*next)()) {
    if (at_end() || is_symbol(";") || is_symbol(")") || is_symbol(",") || is_symbol("::") ||
        is_word("THEN") || is_word("WINDOW")) {
      fail(op, "expected expression after '" + op.text + "'");
    }
    return (this->*next)();
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (is_word("OR")) {
      const Token op = take();
      ExprPtr rhs = operand_after(op, &Parser::parse_and);
      lhs = make(op, Binary{BinaryOp::logical_or, lhs, rhs});
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (is_word("AND")) {
      const Token op = take();
      ExprPtr rhs = operand_after(op, &Parser::parse_not);
      lhs = make(op, Binary{BinaryOp::logical_and, lhs, rhs});
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (is_word("NOT")) {
      const Token op = take();
      return make(op, Unary{UnaryOp::logical_not, operand_after(op, &Parser::parse_not)});
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    static const std::pair<std::string_view, BinaryOp> ops[] = {
        {"<", BinaryOp::lt},  {"<=", BinaryOp::le}, {">", BinaryOp::gt},
        {">=", BinaryOp::ge}, {"==", BinaryOp::eq}, {"!=", BinaryOp::ne}};
    for (const auto& [sym, op] : ops) {
      if (is_symbol(sym)) {
        const Token t = take();
        ExprPtr rhs = operand_after(t, &Parser::parse_additive);
        return make(t, Binary{op, lhs, rhs});
      }
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (is_symbol("+") || is_symbol("-")) {
      const Token t = take();
      ExprPtr rhs = operand_after(t, &Parser::parse_multiplicative);
      lhs = make(t, Binary{t.text == "+" ? BinaryOp::add : BinaryOp::sub, lhs, rhs});
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (is_symbol("*") || is_symbol("/")) {
      const Token t = take();
      ExprPtr rhs = operand_after(t, &Parser::parse_unary);
      lhs = make(t, Binary{t.text == "*" ? BinaryOp::mul : BinaryOp::div, lhs, rhs});
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (is_symbol("-")) {
      const Token t = take();
      return make(t, Unary{UnaryOp::negate, operand_after(t, &Parser::parse_unary)});
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Tok::number) {
      const Token n = take();
      return make(n, NumberLit{n.number});
    }
    if (is_symbol("(")) {
      take();
      ExprPtr inner = expression();
      expect_symbol(")");
      return inner;
    }
    if (t.kind == Tok::ident && !is_keyword(t.text)) {
      const Token name = take();
      if (is_symbol("(")) {
        take();
        Call call{name.text, {}};
        if (!is_symbol(")")) {
          call.args.push_back(expression());
          while (is_symbol(",")) {
            take();
            call.args.push_back(expression());
          }
        }
        expect_symbol(")");
        check_arity(name, call);
        return make(name, std::move(call));
      }
      return make(name, Ref{name.text});
    }
    fail(t, "expected expression, found " + describe(t));
  }

  void check_arity(const Token& at, const Call& c) const {
    static const std::map<std::string, std::size_t, std::less<>> arity = {
        {"DELTA", 1}, {"ABS", 1}, {"MIN", 2}, {"MAX", 2}, {"BALANCE", 4}};
    auto it = arity.find(c.function);
    if (it == arity.end()) fail(at, "unknown function '" + c.function + "'");
    if (it->second != c.args.size()) {
      fail(at, c.function + " expects " + std::to_string(it->second) + " argument(s)");
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

std::optional<double> builtin_constant(std::string_view name) {
  static const std::map<std::string, double, std::less<>> constants = {
      {"ON", 1.0},      {"OFF", 0.0},      {"OPEN", 1.0},    {"CLOSED", 0.0},
      {"TRANSITION", 2.0}, {"RUNNING", 1.0}, {"STOPPED", 0.0}, {"AUTO", 0.0},
      {"MANUAL", 1.0},  {"TRUE", 1.0},     {"FALSE", 0.0}};
  auto it = constants.find(name);
  if (it == constants.end()) return std::nullopt;
  return it->second;
}

double truth(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

bool is_comparison(BinaryOp op) {
  switch (op) {
    case BinaryOp::lt:
    case BinaryOp::le:
    case BinaryOp::gt:
    case BinaryOp::ge:
    case BinaryOp::eq:
    case BinaryOp::ne:
      return true;
    default:
      return false;
  }
}

double EvalContext::value_of(std::string_view name) const {
  if (lookup_) {
    if (auto v = lookup_(name)) return *v;
  }
  if (auto c = builtin_constant(name)) return *c;
  throw UndefinedReference(std::string(name));
}

CallState& EvalContext::state_for(const Expr* site) {
  static thread_local std::unordered_map<const Expr*, CallState> scratch;
  return history_ ? (*history_)[site] : scratch[site];
}

double evaluate(const Expr& e, EvalContext& ctx) {
  return std::visit(
      [&](const auto& n) -> double {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, NumberLit>) {
          return n.value;
        } else if constexpr (std::is_same_v<N, Ref>) {
          return ctx.value_of(n.name);
        } else if constexpr (std::is_same_v<N, Unary>) {
          double v = evaluate(*n.operand, ctx);
          return n.op == UnaryOp::negate ? -v : truth(v == 0.0);
        } else if constexpr (std::is_same_v<N, Binary>) {
          // Both sides always run so history functions advance every scan.
          double a = evaluate(*n.lhs, ctx);
          double b = evaluate(*n.rhs, ctx);
          switch (n.op) {
            case BinaryOp::logical_and: return truth(a != 0.0 && b != 0.0);
            case BinaryOp::logical_or: return truth(a != 0.0 || b != 0.0);
            case BinaryOp::add: return a + b;
            case BinaryOp::sub: return a - b;
            case BinaryOp::mul: return a * b;
            case BinaryOp::div: return a / b;
            case BinaryOp::lt: return truth(a < b);
            case BinaryOp::le: return truth(a <= b);
            case BinaryOp::gt: return truth(a > b);
            case BinaryOp::ge: return truth(a >= b);
            case BinaryOp::eq: return truth(a == b);
            case BinaryOp::ne: return truth(a != b);
            default: return 0.0;
          }
        } else {
          if (n.function == "ABS") return std::fabs(evaluate(*n.args[0], ctx));
          if (n.function == "MIN") {
            return std::min(evaluate(*n.args[0], ctx), evaluate(*n.args[1], ctx));
          }
          if (n.function == "MAX") {
            return std::max(evaluate(*n.args[0], ctx), evaluate(*n.args[1], ctx));
          }
          CallState& st = ctx.state_for(&e);
          if (n.function == "DELTA") {
            double v = evaluate(*n.args[0], ctx);
            double d = st.previous ? v - *st.previous : 0.0;
            st.previous = v;
            return d;
          }
          // BALANCE: measured level minus the level predicted by integrating
          // the metered flows with the plant's mass-balance formula.
          double level = evaluate(*n.args[0], ctx);
          double in = evaluate(*n.args[1], ctx);
          double out = evaluate(*n.args[2], ctx);
          double area = evaluate(*n.args[3], ctx);
          if (!st.predicted) {
            st.predicted = level;
          } else {
            st.predicted = *st.predicted + (in - out) * ctx.scan_period() / area;
          }
          return level - *st.predicted;
        }
      },
      e.node);
}

void collect_refs(const Expr& e, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Ref>) {
          out.push_back(n.name);
        } else if constexpr (std::is_same_v<N, Unary>) {
          collect_refs(*n.operand, out);
        } else if constexpr (std::is_same_v<N, Binary>) {
          collect_refs(*n.lhs, out);
          collect_refs(*n.rhs, out);
        } else if constexpr (std::is_same_v<N, Call>) {
          for (const auto& a : n.args) collect_refs(*a, out);
        }
      },
      e.node);
}

ControlProgram parse_program(std::string_view source) {
  Parser p(Lexer(source).run());
  ControlProgram prog;
  while (!p.at_end()) {
    const Token head = p.peek();
    if (p.is_word("SETPOINT")) {
      p.take();
      const Token name_tok = p.peek();
      std::string name = p.expect_name("setpoint name");
      p.expect_symbol("=");
      double value = p.expect_signed_number();
      p.expect_symbol(";");
      if (!prog.setpoints.emplace(name, value).second) {
        p.fail(name_tok, "duplicate setpoint '" + name + "'");
      }
    } else if (p.is_word("RUNG")) {
      p.take();
      Rung rung;
      rung.line = head.line;
      if (p.is_word("THEN")) p.fail(p.peek(), "expected expression, found 'THEN'");
      rung.condition = p.expression();
      p.expect_word("THEN");
      for (;;) {
        const Token act = p.peek();
        if (p.is_word("SET")) {
          p.take();
          SetAction s;
          s.tag = p.expect_name("tag name");
          p.expect_symbol("=");
          s.value = p.expression();
          rung.actions.emplace_back(std::move(s));
        } else if (p.is_word("CMD")) {
          p.take();
          CmdAction c;
          c.target = p.expect_name("actuator name");
          if (p.peek().kind != Tok::ident) {
            p.fail(p.peek(), "expected command word, found " + p.describe(p.peek()));
          }
          c.command = p.take().text;
          rung.actions.emplace_back(std::move(c));
        } else if (act.kind == Tok::ident) {
          p.fail(act, "unknown action keyword '" + act.text + "'");
        } else {
          p.fail(act, "expected action, found " + p.describe(act));
        }
        if (p.is_symbol(",")) {
          p.take();
          continue;
        }
        break;
      }
      p.expect_symbol(";");
      prog.rungs.push_back(std::move(rung));
    } else {
      p.fail(head, "expected SETPOINT or RUNG, found " + p.describe(head));
    }
  }
  return prog;
}

std::vector<InvariantRule> parse_invariants(std::string_view source) {
  std::vector<InvariantRule> rules;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t nl = source.find('\n', start);
    std::string_view line =
        source.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    start = nl == std::string_view::npos ? source.size() + 1 : nl + 1;

    // Re-lex the line with the right line number.
    std::string padded(line_no - 1, '\n');
    padded.append(line);
    Parser p(Lexer(padded).run());
    if (p.at_end()) continue;

    InvariantRule r;
    r.line = line_no;
    r.id = "R" + std::to_string(rules.size() + 1);
    const Token kind = p.peek();
    if (p.is_word("SA")) {
      r.kind = InvariantKind::state_agnostic;
      p.take();
      if (!p.is_symbol("::")) p.fail(p.peek(), "SA rules take no guard");
    } else if (p.is_word("SD")) {
      r.kind = InvariantKind::state_dependent;
      p.take();
      if (p.is_symbol("::")) p.fail(p.peek(), "SD rules require a guard");
      r.guard = p.expression();
    } else {
      p.fail(kind, "expected SA or SD, found " + p.describe(kind));
    }
    p.expect_symbol("::");
    r.relation = p.expression();
    p.expect_word("WINDOW");
    if (p.peek().kind != Tok::number) p.fail(p.peek(), "expected window length");
    const Token w = p.take();
    if (w.number < 1 || std::floor(w.number) != w.number) p.fail(w, "window must be a positive integer");
    r.window = static_cast<int>(w.number);
    p.expect_word("TOL");
    r.tolerance = p.expect_signed_number();
    if (r.tolerance < 0) p.fail(p.peek(), "tolerance must be non-negative");
    if (!p.at_end()) p.fail(p.peek(), "unexpected " + p.describe(p.peek()) + " after rule");
    rules.push_back(std::move(r));
  }
  return rules;
}

bool relation_holds(const InvariantRule& rule, EvalContext& ctx) {
  const Expr& rel = *rule.relation;
  if (const auto* b = std::get_if<Binary>(&rel.node); b && is_comparison(b->op)) {
    const double a = evaluate(*b->lhs, ctx);
    const double c = evaluate(*b->rhs, ctx);
    const double tol = rule.tolerance;
    switch (b->op) {
      case BinaryOp::lt: return a < c + tol;
      case BinaryOp::le: return a <= c + tol;
      case BinaryOp::gt: return a > c - tol;
      case BinaryOp::ge: return a >= c - tol;
      case BinaryOp::eq: return std::fabs(a - c) <= tol;
      case BinaryOp::ne: return std::fabs(a - c) > tol;
      default: break;
    }
  }
  return std::fabs(evaluate(rel, ctx)) <= rule.tolerance;
}

}  // namespace icsrange::plc
