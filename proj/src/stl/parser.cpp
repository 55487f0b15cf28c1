#include "floral/stl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>

namespace floral::stl {

namespace {

struct Token {
  enum Kind {
    End, Number, Ident, LParen, RParen, LBracket, RBracket, Comma,
    Ge, Le, Gt, Lt, Arrow
  };
  Kind kind = End;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& message, std::size_t pos) const {
    throw ParseError(message + " at position " + std::to_string(pos), pos);
  }

 private:
  void advance() {
    while (at_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[at_]))) ++at_;
    current_ = Token{};
    current_.pos = at_;
    if (at_ >= text_.size()) {
      current_.kind = Token::End;
      return;
    }
    const char c = text_[at_];
    switch (c) {
      case '(': current_.kind = Token::LParen; ++at_; return;
      case ')': current_.kind = Token::RParen; ++at_; return;
      case '[': current_.kind = Token::LBracket; ++at_; return;
      case ']': current_.kind = Token::RBracket; ++at_; return;
      case ',': current_.kind = Token::Comma; ++at_; return;
      case '>':
        ++at_;
        if (at_ < text_.size() && text_[at_] == '=') { ++at_; current_.kind = Token::Ge; }
        else current_.kind = Token::Gt;
        return;
      case '<':
        ++at_;
        if (at_ < text_.size() && text_[at_] == '=') { ++at_; current_.kind = Token::Le; }
        else current_.kind = Token::Lt;
        return;
      case '-':
        if (at_ + 1 < text_.size() && text_[at_ + 1] == '>') {
          at_ += 2;
          current_.kind = Token::Arrow;
          return;
        }
        lex_number();
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t begin = at_;
      while (at_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[at_])) || text_[at_] == '_'))
        ++at_;
      current_.kind = Token::Ident;
      current_.text = std::string(text_.substr(begin, at_ - begin));
      return;
    }
    fail(std::string("unexpected character '") + c + "'", at_);
  }

  void lex_number() {
    std::size_t begin = at_;
    double sign = 1.0;
    if (text_[at_] == '-' || text_[at_] == '+') {
      if (text_[at_] == '-') sign = -1.0;
      ++at_;
    }
    // Signed inf spelled as one token so thresholds like "-inf" work.
    if (text_.substr(at_).starts_with("inf")) {
      at_ += 3;
      current_.kind = Token::Number;
      current_.number = sign * std::numeric_limits<double>::infinity();
      return;
    }
    std::size_t end = at_;
    while (end < text_.size()) {
      const char c = text_[end];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') { ++end; continue; }
      if ((c == 'e' || c == 'E') && end + 1 < text_.size()) {
        const char n = text_[end + 1];
        if (std::isdigit(static_cast<unsigned char>(n)) || n == '-' || n == '+') {
          end += 2;
          continue;
        }
      }
      break;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + at_, text_.data() + end, value);
    if (ec != std::errc() || ptr == text_.data() + at_) fail("malformed number", begin);
    at_ = static_cast<std::size_t>(ptr - text_.data());
    current_.kind = Token::Number;
    current_.number = sign * value;
  }

  std::string_view text_;
  std::size_t at_ = 0;
  Token current_;
};

// Grammar, loosest to tightest binding:
//   implies := or ('->' implies)?
//   or      := and ('or' and)*
//   and     := until ('and' until)*
//   until   := unary ('U' interval unary)?
//   unary   := ('not' | 'G' interval | 'F' interval) unary | '(' implies ')' | atom
//   atom    := channel cmp number
class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_implies();
    if (lexer_.peek().kind != Token::End)
      lexer_.fail("unexpected trailing input", lexer_.peek().pos);
    return f;
  }

 private:
  FormulaPtr parse_implies() {
    FormulaPtr lhs = parse_or();
    if (lexer_.peek().kind == Token::Arrow) {
      lexer_.take();
      return Formula::implication(lhs, parse_implies());
    }
    return lhs;
  }

  FormulaPtr parse_or() {
    FormulaPtr lhs = parse_and();
    while (is_ident("or")) {
      lexer_.take();
      lhs = Formula::disjunction(lhs, parse_and());
    }
    return lhs;
  }

  FormulaPtr parse_and() {
    FormulaPtr lhs = parse_until();
    while (is_ident("and")) {
      lexer_.take();
      lhs = Formula::conjunction(lhs, parse_until());
    }
    return lhs;
  }

  FormulaPtr parse_until() {
    FormulaPtr lhs = parse_unary();
    if (is_ident("U")) {
      Token op = lexer_.take();
      Interval window = parse_interval(op.pos);
      return Formula::until(window, lhs, parse_unary());
    }
    return lhs;
  }

  FormulaPtr parse_unary() {
    const Token& t = lexer_.peek();
    if (t.kind == Token::Ident) {
      if (t.text == "not") {
        lexer_.take();
        return Formula::negation(parse_unary());
      }
      if (t.text == "G" || t.text == "F") {
        Token op = lexer_.take();
        Interval window = parse_interval(op.pos);
        FormulaPtr operand = parse_unary();
        return op.text == "G" ? Formula::always(window, std::move(operand))
                              : Formula::eventually(window, std::move(operand));
      }
      return parse_atom();
    }
    if (t.kind == Token::LParen) {
      lexer_.take();
      FormulaPtr inner = parse_implies();
      expect(Token::RParen, "')'");
      return inner;
    }
    lexer_.fail("expected a formula", t.pos);
  }

  FormulaPtr parse_atom() {
    Token name = expect(Token::Ident, "a channel name like 'x1'");
    int channel = channel_index(name);
    Token cmp = lexer_.take();
    Comparator comparator;
    switch (cmp.kind) {
      case Token::Ge: comparator = Comparator::Ge; break;
      case Token::Le: comparator = Comparator::Le; break;
      case Token::Gt: comparator = Comparator::Gt; break;
      case Token::Lt: comparator = Comparator::Lt; break;
      default: lexer_.fail("expected a comparator after the channel", cmp.pos);
    }
    Token threshold = expect(Token::Number, "a numeric threshold");
    return Formula::predicate(channel, comparator, threshold.number);
  }

  int channel_index(const Token& name) {
    if (name.text.empty() || name.text[0] != 'x')
      lexer_.fail("channel names start with 'x'", name.pos);
    if (name.text.size() == 1) return 0;
    int index = 0;
    for (std::size_t i = 1; i < name.text.size(); ++i) {
      const char c = name.text[i];
      if (!std::isdigit(static_cast<unsigned char>(c)))
        lexer_.fail("channel names look like 'x1', 'x2', ...", name.pos);
      index = index * 10 + (c - '0');
    }
    if (index < 1) lexer_.fail("channel numbering starts at x1", name.pos);
    return index - 1;
  }

  // Interval with open or closed ends; normalized to a closed step range.
  Interval parse_interval(std::size_t op_pos) {
    const Token& open = lexer_.peek();
    bool open_lo;
    if (open.kind == Token::LBracket) open_lo = false;
    else if (open.kind == Token::LParen) open_lo = true;
    else lexer_.fail("expected an interval after the temporal operator", op_pos);
    lexer_.take();

    Token lo = expect(Token::Number, "an integer interval bound");
    expect(Token::Comma, "','");
    Token hi = expect(Token::Number, "an integer interval bound");

    const Token& close = lexer_.peek();
    bool open_hi;
    if (close.kind == Token::RBracket) open_hi = false;
    else if (close.kind == Token::RParen) open_hi = true;
    else lexer_.fail("expected ']' or ')'", close.pos);
    lexer_.take();

    Interval window{to_step(lo), to_step(hi)};
    if (open_lo) ++window.lo;
    if (open_hi) --window.hi;
    if (window.lo < 0 || window.lo > window.hi)
      lexer_.fail("interval is empty after normalization", lo.pos);
    return window;
  }

  int to_step(const Token& t) {
    if (!std::isfinite(t.number) || t.number != std::floor(t.number) || t.number < 0)
      lexer_.fail("interval bounds are nonnegative integers", t.pos);
    return static_cast<int>(t.number);
  }

  bool is_ident(std::string_view name) {
    return lexer_.peek().kind == Token::Ident && lexer_.peek().text == name;
  }

  Token expect(Token::Kind kind, const char* what) {
    if (lexer_.peek().kind != kind)
      lexer_.fail(std::string("expected ") + what, lexer_.peek().pos);
    return lexer_.take();
  }

  Lexer lexer_;
};

std::string format_threshold(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  // Shortest representation that still round-trips exactly.
  char buffer[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    double parsed = 0.0;
    std::from_chars(buffer, buffer + std::strlen(buffer), parsed);
    if (parsed == value) break;
  }
  return buffer;
}

void print_grouped(const FormulaPtr& f, std::string& out);

void print(const FormulaPtr& f, std::string& out) {
  switch (f->kind()) {
    case NodeKind::Predicate:
      out += "x" + std::to_string(f->channel() + 1);
      out += " ";
      out += comparator_symbol(f->comparator());
      out += " ";
      out += format_threshold(f->threshold());
      return;
    case NodeKind::Not:
      out += "not ";
      print_grouped(f->left(), out);
      return;
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Implies: {
      const char* op = f->kind() == NodeKind::And ? " and " :
                       f->kind() == NodeKind::Or ? " or " : " -> ";
      out += "(";
      print(f->left(), out);
      out += op;
      print(f->right(), out);
      out += ")";
      return;
    }
    case NodeKind::Always:
    case NodeKind::Eventually:
      out += f->kind() == NodeKind::Always ? "G" : "F";
      out += "[" + std::to_string(f->interval().lo) + "," + std::to_string(f->interval().hi) + "]";
      print_grouped(f->left(), out);
      return;
    case NodeKind::Until:
      out += "(";
      print_grouped(f->left(), out);
      out += " U[" + std::to_string(f->interval().lo) + "," +
             std::to_string(f->interval().hi) + "] ";
      print_grouped(f->right(), out);
      out += ")";
      return;
  }
}

void print_grouped(const FormulaPtr& f, std::string& out) {
  // Binary nodes already print their own parentheses.
  switch (f->kind()) {
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Implies:
    case NodeKind::Until:
      print(f, out);
      return;
    default:
      out += "(";
      print(f, out);
      out += ")";
      return;
  }
}

}  // namespace

FormulaPtr parse_formula(std::string_view text) {
  return Parser(text).parse();
}

std::string print_formula(const FormulaPtr& formula) {
  if (!formula) throw SchemaError("null formula");
  std::string out;
  print(formula, out);
  return out;
}

}  // namespace floral::stl
