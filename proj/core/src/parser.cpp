#include "certbound/parser.hpp"

#include "certbound/error.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace certbound {

namespace {

enum class Tok { Ident, Number, Punct, Newline, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '\n' || c == ';') {
      out.push_back({Tok::Newline, std::string(1, c), line, col});
      advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t{Tok::Punct, "", line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
    } else if (c == '>' && i + 1 < src.size() && src[i + 1] == '=') {
      t.text = ">=";
    } else if (std::string_view("+-*/^()[],:").find(c) != std::string_view::npos) {
      t.text = std::string(1, c);
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    const std::size_t len = t.text.size();
    out.push_back(std::move(t));
    advance(len);
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::size_t begin, std::size_t end)
      : tokens_(std::move(tokens)), pos_(begin), end_(end) {}

  void set_variables(const std::unordered_map<std::string, std::size_t>* vars) { vars_ = vars; }

  const Token& peek() const { return pos_ < end_ ? tokens_[pos_] : tokens_[end_]; }
  bool at_end() const { return pos_ >= end_ || tokens_[pos_].kind == Tok::End; }
  bool peek_punct(std::string_view p) const { return !at_end() && peek().kind == Tok::Punct && peek().text == p; }

  Token take() {
    if (at_end()) fail("unexpected end of statement");
    return tokens_[pos_++];
  }

  void expect(std::string_view p) {
    if (!peek_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError(msg + (at_end() ? "" : " near '" + t.text + "'"), t.line, t.column);
  }

  Rational signed_number() {
    bool negative = false;
    while (peek_punct("-") || peek_punct("+")) negative ^= (take().text == "-");
    const Token t = take();
    if (t.kind != Tok::Number) throw ParseError("expected a number", t.line, t.column);
    Rational r;
    try {
      r = parse_rational(t.text);
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
    }
    return negative ? Rational(-r) : r;
  }

  ExprPtr expression() {
    ExprPtr lhs = term();
    while (peek_punct("+") || peek_punct("-")) {
      const bool plus = take().text == "+";
      ExprPtr rhs = term();
      lhs = binary(plus ? BinaryOp::Add : BinaryOp::Sub, lhs, rhs);
    }
    return lhs;
  }

 private:
  ExprPtr term() {
    ExprPtr lhs = unary();
    while (peek_punct("*") || peek_punct("/")) {
      const Token op = take();
      ExprPtr rhs = unary();
      try {
        lhs = binary(op.text == "*" ? BinaryOp::Mul : BinaryOp::Div, lhs, rhs);
      } catch (const DomainError& e) {
        throw ParseError(e.what(), op.line, op.column);
      }
    }
    return lhs;
  }

  ExprPtr unary() {
    if (peek_punct("-")) {
      take();
      return negate(unary());
    }
    if (peek_punct("+")) {
      take();
      return unary();
    }
    return power_expr();
  }

  ExprPtr power_expr() {
    ExprPtr base = primary();
    if (peek_punct("^")) {
      take();
      const Token t = take();
      if (t.kind != Tok::Number || t.text.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("exponent must be a nonnegative integer literal", t.line, t.column);
      if (t.text.size() > 3) throw ParseError("exponent too large", t.line, t.column);
      return power(base, static_cast<unsigned>(std::stoul(t.text)));
    }
    return base;
  }

  ExprPtr primary() {
    const Token t = take();
    if (t.kind == Tok::Number) {
      try {
        return constant(parse_rational(t.text));
      } catch (const std::invalid_argument&) {
        throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
      }
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      ExprPtr e = expression();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) throw ParseError("unexpected token '" + t.text + "'", t.line, t.column);
    if (peek_punct("(")) return call(t);
    if (vars_) {
      auto it = vars_->find(t.text);
      if (it != vars_->end()) return variable(it->second);
    }
    throw ParseError("unknown variable '" + t.text + "'", t.line, t.column);
  }

  ExprPtr call(const Token& name) {
    expect("(");
    std::vector<ExprPtr> args;
    args.push_back(expression());
    while (peek_punct(",")) {
      take();
      args.push_back(expression());
    }
    expect(")");
    static const std::unordered_map<std::string, Function> functions = {
        {"sin", Function::Sin}, {"cos", Function::Cos}, {"arctan", Function::Arctan},
        {"atan", Function::Arctan}, {"exp", Function::Exp}, {"log", Function::Log}};
    const std::string& n = name.text;
    if (n == "min" || n == "max") return min_max(n == "min" ? MinMaxKind::Min : MinMaxKind::Max, std::move(args));
    if (args.size() != 1) throw ParseError("function '" + n + "' takes one argument", name.line, name.column);
    if (n == "sqrt") return sqrt_of(args[0]);
    if (n == "abs") return abs_of(args[0]);
    auto it = functions.find(n);
    if (it == functions.end()) throw ParseError("unknown function '" + n + "'", name.line, name.column);
    return apply(it->second, args[0]);
  }

  std::vector<Token> tokens_;
  std::size_t pos_;
  std::size_t end_;
  const std::unordered_map<std::string, std::size_t>* vars_ = nullptr;
};

struct Statement {
  std::size_t begin;
  std::size_t end;
};

}  // namespace

Problem parse_problem(std::string_view text) {
  std::vector<Token> tokens = tokenize(text);
  // split into statements at newlines outside brackets
  std::vector<Statement> statements;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind == Tok::Punct && (t.text == "(" || t.text == "[")) ++depth;
    if (t.kind == Tok::Punct && (t.text == ")" || t.text == "]")) --depth;
    const bool boundary = t.kind == Tok::End || (t.kind == Tok::Newline && (depth <= 0 || t.text == ";"));
    if (boundary) {
      if (i > start) statements.push_back({start, i});
      start = i + 1;
    }
  }
  // newlines inside brackets are plain whitespace
  std::vector<Token> flat;
  std::vector<Statement> flat_statements;
  for (const auto& s : statements) {
    const std::size_t b = flat.size();
    for (std::size_t i = s.begin; i < s.end; ++i)
      if (tokens[i].kind != Tok::Newline) flat.push_back(tokens[i]);
    flat_statements.push_back({b, flat.size()});
  }
  flat.push_back(tokens.back());

  Problem problem;
  std::vector<Interval> sides;
  std::unordered_map<std::string, std::size_t> vars;
  std::optional<Statement> objective;
  Token objective_token;

  auto parse_decl = [&](Parser& p) {
    const Token name = p.take();
    if (name.kind != Tok::Ident) throw ParseError("expected a variable name", name.line, name.column);
    const Token in = p.take();
    if (in.kind != Tok::Ident || in.text != "in") throw ParseError("expected 'in'", in.line, in.column);
    p.expect("[");
    const Rational lo = p.signed_number();
    p.expect(",");
    const Rational hi = p.signed_number();
    p.expect("]");
    if (lo > hi) throw ParseError("variable '" + name.text + "' has lo > hi", name.line, name.column);
    if (vars.count(name.text)) throw ParseError("variable '" + name.text + "' declared twice", name.line, name.column);
    vars.emplace(name.text, problem.names.size());
    problem.names.push_back(name.text);
    sides.emplace_back(to_double_down(lo), to_double_up(hi));
  };

  for (const auto& s : flat_statements) {
    Parser p(flat, s.begin, s.end);
    const Token head = flat[s.begin];
    const bool keyword = head.kind == Tok::Ident && s.end > s.begin + 1 && flat[s.begin + 1].text == ":" &&
                         flat[s.begin + 1].kind == Tok::Punct;
    if (!keyword) {
      parse_decl(p);
      if (!p.at_end()) p.fail("trailing input after declaration");
      continue;
    }
    p.take();
    p.take();
    if (head.text == "vars") {
      parse_decl(p);
      while (p.peek_punct(",")) {
        p.take();
        parse_decl(p);
      }
      if (!p.at_end()) p.fail("expected ',' between declarations");
    } else if (head.text == "objective") {
      if (objective) throw ParseError("objective given twice", head.line, head.column);
      objective = Statement{s.begin + 2, s.end};
      objective_token = head;
    } else if (head.text == "goal") {
      const Token w = p.take();
      if (w.kind != Tok::Ident || w.text != "prove") throw ParseError("expected 'prove'", w.line, w.column);
      p.expect(">=");
      problem.goal = p.signed_number();
      if (!p.at_end()) p.fail("trailing input after goal");
    } else {
      throw ParseError("unknown statement '" + head.text + "'", head.line, head.column);
    }
  }
  if (!objective) throw ParseError("missing objective", tokens.back().line, tokens.back().column);
  if (sides.empty()) throw ParseError("no variables declared", objective_token.line, objective_token.column);
  Parser p(flat, objective->begin, objective->end);
  p.set_variables(&vars);
  if (p.at_end()) p.fail("empty objective");
  problem.objective = p.expression();
  if (!p.at_end()) p.fail("unexpected token in objective");
  problem.box = Box(std::move(sides));
  return problem;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Usage, "cannot open problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

ExprPtr parse_expression(std::string_view text, std::span<const std::string> names) {
  std::vector<Token> tokens = tokenize(text);
  std::vector<Token> flat;
  for (auto& t : tokens)
    if (t.kind != Tok::Newline) flat.push_back(std::move(t));
  std::unordered_map<std::string, std::size_t> vars;
  for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], i);
  const std::size_t end = flat.size() - 1;
  Parser p(std::move(flat), 0, end);
  p.set_variables(&vars);
  ExprPtr e = p.expression();
  if (!p.at_end()) p.fail("unexpected token");
  return e;
}

}  // namespace certbound
