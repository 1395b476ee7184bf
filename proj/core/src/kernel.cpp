#include "oat/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace oat {

std::string ParseError::format(const std::string& msg, int line, int col) {
  std::ostringstream os;
  os << "line " << line;
  if (col > 0) os << ":" << col;
  os << ": " << msg;
  return os.str();
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

ExprPtr make_int(long long v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::IntLit;
  e->int_value = v;
  e->real_value = static_cast<double>(v);
  return e;
}

ExprPtr make_real(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::RealLit;
  e->real_value = v;
  return e;
}

ExprPtr make_scalar(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::ScalarRef;
  e->name = lower(std::move(name));
  return e;
}

ExprPtr make_array(std::string name, std::vector<ExprPtr> indices) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::ArrayRef;
  e->name = lower(std::move(name));
  e->args = std::move(indices);
  return e;
}

ExprPtr make_unary(std::string op, ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Unary;
  e->name = std::move(op);
  e->args = {std::move(operand)};
  return e;
}

ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Binary;
  e->name = std::move(op);
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr make_call(std::string name, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Call;
  e->name = lower(std::move(name));
  e->args = std::move(args);
  return e;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::IntLit:
      return a->int_value == b->int_value;
    case ExprKind::RealLit:
      return a->real_value == b->real_value;
    default:
      break;
  }
  if (a->name != b->name || a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  return true;
}

namespace {

// Higher binds tighter. `**` is right associative.
int precedence(const std::string& op) {
  if (op == ".or.") return 1;
  if (op == ".and.") return 2;
  if (op == "<" || op == "<=" || op == ">" || op == ">=" || op == "==" || op == "/=") return 3;
  if (op == "+" || op == "-") return 4;
  if (op == "*" || op == "/") return 5;
  if (op == "**") return 7;
  return 0;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

void print_expr(std::ostringstream& os, const ExprPtr& e, int parent_prec) {
  switch (e->kind) {
    case ExprKind::IntLit:
      os << e->int_value;
      break;
    case ExprKind::RealLit:
      os << format_real(e->real_value);
      break;
    case ExprKind::ScalarRef:
      os << e->name;
      break;
    case ExprKind::ArrayRef:
    case ExprKind::Call: {
      os << e->name << "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ",";
        print_expr(os, e->args[i], 0);
      }
      os << ")";
      break;
    }
    case ExprKind::Unary: {
      bool paren = parent_prec > 4;
      if (paren) os << "(";
      os << e->name;
      print_expr(os, e->args[0], 6);
      if (paren) os << ")";
      break;
    }
    case ExprKind::Binary: {
      int prec = precedence(e->name);
      bool paren = prec < parent_prec;
      if (paren) os << "(";
      print_expr(os, e->args[0], prec);
      if (e->name == ".and." || e->name == ".or.") {
        os << " " << e->name << " ";
      } else {
        os << e->name;
      }
      // Right operand needs one extra level for left-assoc operators.
      print_expr(os, e->args[1], e->name == "**" ? prec : prec + 1);
      if (paren) os << ")";
      break;
    }
  }
}

}  // namespace

std::string expr_to_string(const ExprPtr& e) {
  std::ostringstream os;
  print_expr(os, e, 0);
  return os.str();
}

StmtPtr make_do(std::string var, ExprPtr lo, ExprPtr hi, ExprPtr step,
                std::vector<StmtPtr> body) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Do;
  s->var = lower(std::move(var));
  s->lo = std::move(lo);
  s->hi = std::move(hi);
  s->step = std::move(step);
  s->body = std::move(body);
  return s;
}

StmtPtr make_assign(ExprPtr lhs, ExprPtr rhs) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Assign;
  s->assigns.push_back({std::move(lhs), std::move(rhs)});
  return s;
}

StmtPtr make_multi_assign(std::vector<AssignPart> parts) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Assign;
  s->assigns = std::move(parts);
  return s;
}

StmtPtr make_passthrough(std::string text) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Passthrough;
  s->text = std::move(text);
  return s;
}

StmtPtr make_marker(MarkerKind kind, std::vector<std::string> vars) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Marker;
  s->marker = kind;
  s->marker_vars = std::move(vars);
  return s;
}

StmtPtr make_hole(int index) {
  auto s = std::make_shared<Stmt>();
  s->kind = Stmt::Kind::Hole;
  s->hole_index = index;
  return s;
}

StmtPtr clone_stmt(const StmtPtr& s) {
  auto c = std::make_shared<Stmt>(*s);
  c->body.clear();
  for (const auto& b : s->body) c->body.push_back(clone_stmt(b));
  return c;
}

bool stmt_equal(const StmtPtr& a, const StmtPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Stmt::Kind::Do: {
      if (a->var != b->var) return false;
      if (!expr_equal(a->lo, b->lo) || !expr_equal(a->hi, b->hi)) return false;
      ExprPtr one = make_int(1);
      if (!expr_equal(a->step ? a->step : one, b->step ? b->step : one)) return false;
      if (a->body.size() != b->body.size()) return false;
      for (size_t i = 0; i < a->body.size(); ++i)
        if (!stmt_equal(a->body[i], b->body[i])) return false;
      return true;
    }
    case Stmt::Kind::Assign: {
      if (a->assigns.size() != b->assigns.size()) return false;
      for (size_t i = 0; i < a->assigns.size(); ++i) {
        if (!expr_equal(a->assigns[i].lhs, b->assigns[i].lhs)) return false;
        if (!expr_equal(a->assigns[i].rhs, b->assigns[i].rhs)) return false;
      }
      return true;
    }
    case Stmt::Kind::Passthrough:
      return a->text == b->text;
    case Stmt::Kind::Marker:
      return a->marker == b->marker && a->marker_vars == b->marker_vars;
    case Stmt::Kind::Hole:
      return a->hole_index == b->hole_index;
  }
  return false;
}

KernelProgram clone_program(const KernelProgram& p) {
  KernelProgram c;
  c.decls = p.decls;
  for (const auto& s : p.stmts) c.stmts.push_back(clone_stmt(s));
  return c;
}

bool program_equal(const KernelProgram& a, const KernelProgram& b) {
  if (a.stmts.size() != b.stmts.size()) return false;
  if (a.decls.size() != b.decls.size()) return false;
  for (size_t i = 0; i < a.decls.size(); ++i) {
    if (a.decls[i].name != b.decls[i].name) return false;
    if (a.decls[i].extents.size() != b.decls[i].extents.size()) return false;
    for (size_t j = 0; j < a.decls[i].extents.size(); ++j)
      if (!expr_equal(a.decls[i].extents[j], b.decls[i].extents[j])) return false;
  }
  for (size_t i = 0; i < a.stmts.size(); ++i)
    if (!stmt_equal(a.stmts[i], b.stmts[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Expression lexer/parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Int, Real, Op, LParen, RParen, Comma, End } kind;
  std::string text;   // ident (lowercased) or operator spelling
  long long int_value = 0;
  double real_value = 0.0;
  int col = 0;
};

class Lexer {
 public:
  Lexer(const std::string& s, int line) : s_(s), line_(line) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    tok_.col = static_cast<int>(pos_) + 1;
    if (pos_ >= s_.size()) {
      tok_.kind = Token::Kind::End;
      tok_.text.clear();
      return;
    }
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      lex_number();
      return;
    }
    if (c == '.') {
      // .and. / .or. / .true. / .false. / .not.
      size_t end = s_.find('.', pos_ + 1);
      if (end == std::string::npos)
        throw ParseError("stray '.'", line_, tok_.col);
      std::string word = lower(s_.substr(pos_, end - pos_ + 1));
      pos_ = end + 1;
      if (word == ".true.") {
        tok_.kind = Token::Kind::Int;
        tok_.int_value = 1;
        return;
      }
      if (word == ".false.") {
        tok_.kind = Token::Kind::Int;
        tok_.int_value = 0;
        return;
      }
      tok_.kind = Token::Kind::Op;
      tok_.text = word;
      return;
    }
    if (is_ident_start(c)) {
      size_t start = pos_;
      while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
      tok_.kind = Token::Kind::Ident;
      tok_.text = lower(s_.substr(start, pos_ - start));
      return;
    }
    switch (c) {
      case '(':
        tok_.kind = Token::Kind::LParen;
        ++pos_;
        return;
      case ')':
        tok_.kind = Token::Kind::RParen;
        ++pos_;
        return;
      case ',':
        tok_.kind = Token::Kind::Comma;
        ++pos_;
        return;
      default:
        break;
    }
    static const char* two_char[] = {"**", "<=", ">=", "==", "/="};
    for (const char* op : two_char) {
      if (s_.compare(pos_, 2, op) == 0) {
        tok_.kind = Token::Kind::Op;
        tok_.text = op;
        pos_ += 2;
        return;
      }
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '<' || c == '>' || c == '=') {
      tok_.kind = Token::Kind::Op;
      tok_.text = std::string(1, c);
      ++pos_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, tok_.col);
  }

  void lex_number() {
    size_t start = pos_;
    bool real = false;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      // Don't swallow `.and.` style operators after an integer.
      size_t q = pos_ + 1;
      if (q >= s_.size() || !is_ident_start(s_[q]) ||
          std::isdigit(static_cast<unsigned char>(s_[q]))) {
        real = true;
        ++pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        // Peek: ".and." has an identifier then '.', a kind suffix does not.
        size_t e = q;
        while (e < s_.size() && is_ident_char(s_[e])) ++e;
        if (e >= s_.size() || s_[e] != '.') {
          real = true;
          ++pos_;
        }
      }
    }
    std::string digits = s_.substr(start, pos_ - start);
    std::string mantissa = digits;
    if (pos_ < s_.size() &&
        (s_[pos_] == 'e' || s_[pos_] == 'E' || s_[pos_] == 'd' || s_[pos_] == 'D')) {
      size_t q = pos_ + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
        size_t estart = pos_;
        pos_ = q;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        std::string exp = s_.substr(estart, pos_ - estart);
        exp[0] = 'e';  // normalize d0 exponents
        mantissa += exp;
        real = true;
      }
    }
    if (pos_ < s_.size() && s_[pos_] == '_') {
      // Kind suffix (e.g. 2.0_PN) is accepted and ignored.
      ++pos_;
      while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    }
    if (real) {
      tok_.kind = Token::Kind::Real;
      tok_.real_value = std::stod(mantissa);
    } else {
      tok_.kind = Token::Kind::Int;
      tok_.int_value = std::stoll(mantissa);
    }
  }

  const std::string& s_;
  int line_;
  size_t pos_ = 0;
  Token tok_;
};

const char* kIntrinsics[] = {"abs", "dlog", "log", "min", "max", "mod", "int"};

bool is_intrinsic(const std::string& name) {
  for (const char* s : kIntrinsics)
    if (name == s) return true;
  return false;
}

class ExprParser {
 public:
  ExprParser(const std::string& s, int line) : lex_(s, line), line_(line) {}

  ExprPtr parse() {
    ExprPtr e = parse_or();
    if (lex_.peek().kind != Token::Kind::End)
      throw ParseError("trailing tokens in expression", line_, lex_.peek().col);
    return e;
  }

  // Parses an expression and stops at the first token it cannot consume.
  ExprPtr parse_prefix() { return parse_or(); }

  bool at_end() const { return lex_.peek().kind == Token::Kind::End; }

 private:
  ExprPtr parse_or() {
    ExprPtr e = parse_and();
    while (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == ".or.") {
      lex_.take();
      e = make_binary(".or.", e, parse_and());
    }
    return e;
  }

  ExprPtr parse_and() {
    ExprPtr e = parse_rel();
    while (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == ".and.") {
      lex_.take();
      e = make_binary(".and.", e, parse_rel());
    }
    return e;
  }

  ExprPtr parse_rel() {
    ExprPtr e = parse_add();
    if (lex_.peek().kind == Token::Kind::Op) {
      std::string op = lex_.peek().text;
      if (op == "<" || op == "<=" || op == ">" || op == ">=" || op == "==" || op == "/=") {
        lex_.take();
        e = make_binary(op, e, parse_add());
      }
    }
    return e;
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      std::string op = lex_.take().text;
      e = make_binary(op, e, parse_mul());
    }
    return e;
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_unary();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      std::string op = lex_.take().text;
      e = make_binary(op, e, parse_unary());
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
      lex_.take();
      return make_unary("-", parse_unary());
    }
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "+") {
      lex_.take();
      return parse_unary();
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "**") {
      lex_.take();
      return make_binary("**", base, parse_unary());  // right associative
    }
    return base;
  }

  ExprPtr parse_primary() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Int:
        return make_int(t.int_value);
      case Token::Kind::Real:
        return make_real(t.real_value);
      case Token::Kind::LParen: {
        ExprPtr e = parse_or();
        expect_rparen();
        return e;
      }
      case Token::Kind::Ident: {
        if (lex_.peek().kind == Token::Kind::LParen) {
          lex_.take();
          std::vector<ExprPtr> args;
          if (lex_.peek().kind != Token::Kind::RParen) {
            args.push_back(parse_or());
            while (lex_.peek().kind == Token::Kind::Comma) {
              lex_.take();
              args.push_back(parse_or());
            }
          }
          expect_rparen();
          if (is_intrinsic(t.text)) {
            check_arity(t.text, args.size());
            return make_call(t.text, std::move(args));
          }
          if (args.empty() || args.size() > 3)
            throw ParseError("array reference '" + t.text + "' must have rank 1..3", line_, t.col);
          return make_array(t.text, std::move(args));
        }
        return make_scalar(t.text);
      }
      default:
        throw ParseError("unexpected token in expression", line_, t.col);
    }
  }

  void check_arity(const std::string& name, size_t n) {
    bool ok;
    if (name == "min" || name == "max")
      ok = n >= 2;
    else if (name == "mod")
      ok = n == 2;
    else
      ok = n == 1;
    if (!ok) throw ParseError("wrong number of arguments to " + name, line_, 0);
  }

  void expect_rparen() {
    Token t = lex_.take();
    if (t.kind != Token::Kind::RParen) throw ParseError("expected ')'", line_, t.col);
  }

  Lexer lex_;
  int line_;
};

}  // namespace

ExprPtr parse_expression(const std::string& text, int line) {
  return ExprParser(text, line).parse();
}

// ---------------------------------------------------------------------------
// Statement parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// True for `do v = ...` headers; extracts var and the bound list.
bool match_do_header(const std::string& line, std::string* var, std::string* bounds) {
  std::string t = trim(line);
  std::string low = lower(t);
  if (low.rfind("do", 0) != 0) return false;
  size_t p = 2;
  if (p >= t.size() || !std::isspace(static_cast<unsigned char>(t[p]))) return false;
  while (p < t.size() && std::isspace(static_cast<unsigned char>(t[p]))) ++p;
  size_t vstart = p;
  while (p < t.size() && is_ident_char(t[p])) ++p;
  if (p == vstart) return false;
  std::string v = t.substr(vstart, p - vstart);
  while (p < t.size() && std::isspace(static_cast<unsigned char>(t[p]))) ++p;
  if (p >= t.size() || t[p] != '=') return false;
  *var = lower(v);
  *bounds = t.substr(p + 1);
  return true;
}

bool match_enddo(const std::string& line) {
  std::string low = lower(trim(line));
  low.erase(std::remove_if(low.begin(), low.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            low.end());
  return low == "enddo";
}

// Splits on top-level commas (outside parens).
std::vector<std::string> split_top_commas(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Splits on top-level semicolons.
std::vector<std::string> split_semicolons(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ';' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

AssignPart parse_assign_part(const std::string& text, int line) {
  // Find the top-level '=' that is not part of ==, <=, >=, /=.
  int depth = 0;
  size_t eq = std::string::npos;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && c == '=') {
      char prev = i > 0 ? text[i - 1] : ' ';
      char next = i + 1 < text.size() ? text[i + 1] : ' ';
      if (prev != '=' && prev != '<' && prev != '>' && prev != '/' && next != '=') {
        eq = i;
        break;
      }
    }
  }
  if (eq == std::string::npos) throw ParseError("expected assignment", line);
  ExprPtr lhs = parse_expression(trim(text.substr(0, eq)), line);
  if (lhs->kind != ExprKind::ScalarRef && lhs->kind != ExprKind::ArrayRef)
    throw ParseError("left-hand side must be a scalar or array reference", line);
  ExprPtr rhs = parse_expression(trim(text.substr(eq + 1)), line);
  return {lhs, rhs};
}

bool match_dimension(const std::string& line, ArrayDecl* decl, int line_no) {
  std::string t = trim(line);
  std::string low = lower(t);
  if (low.rfind("dimension", 0) != 0) return false;
  std::string rest = trim(t.substr(9));
  ExprPtr e = parse_expression(rest, line_no);
  if (e->kind != ExprKind::ArrayRef)
    throw ParseError("malformed dimension declaration", line_no);
  decl->name = e->name;
  decl->extents = e->args;
  return true;
}

struct LineParser {
  const std::vector<KernelLine>& lines;
  size_t pos = 0;
  KernelProgram prog;

  std::vector<StmtPtr> parse_block(const std::string& open_var, int open_line) {
    std::vector<StmtPtr> out;
    while (pos < lines.size()) {
      const KernelLine& kl = lines[pos];
      if (kl.kind == KernelLine::Kind::Marker) {
        ++pos;
        auto m = make_marker(kl.marker, kl.marker_vars);
        m->line = kl.line_no;
        out.push_back(m);
        continue;
      }
      if (kl.kind == KernelLine::Kind::Hole) {
        ++pos;
        auto h = make_hole(kl.hole_index);
        h->line = kl.line_no;
        out.push_back(h);
        continue;
      }
      std::string t = trim(kl.text);
      if (t.empty()) {
        ++pos;
        continue;
      }
      if (t[0] == '!') {
        ++pos;
        auto p = make_passthrough(kl.text);
        p->line = kl.line_no;
        out.push_back(p);
        continue;
      }
      if (match_enddo(t)) {
        if (open_var.empty())
          throw ParseError("'enddo' without matching 'do'", kl.line_no);
        ++pos;
        return out;
      }
      ArrayDecl decl;
      if (match_dimension(t, &decl, kl.line_no)) {
        ++pos;
        prog.decls.push_back(std::move(decl));
        continue;
      }
      std::string var, bounds;
      if (match_do_header(t, &var, &bounds)) {
        ++pos;
        auto parts = split_top_commas(bounds);
        if (parts.size() < 2 || parts.size() > 3)
          throw ParseError("'do' header needs lo, hi [, step]", kl.line_no);
        ExprPtr lo = parse_expression(trim(parts[0]), kl.line_no);
        ExprPtr hi = parse_expression(trim(parts[1]), kl.line_no);
        ExprPtr step = parts.size() == 3 ? parse_expression(trim(parts[2]), kl.line_no) : nullptr;
        auto body = parse_block(var, kl.line_no);
        auto loop = make_do(var, lo, hi, step, std::move(body));
        loop->line = kl.line_no;
        out.push_back(loop);
        continue;
      }
      // One or more ';'-separated assignments.
      ++pos;
      std::vector<AssignPart> parts;
      for (const std::string& piece : split_semicolons(t)) {
        std::string p = trim(piece);
        if (p.empty()) continue;
        parts.push_back(parse_assign_part(p, kl.line_no));
      }
      if (parts.empty()) throw ParseError("empty statement", kl.line_no);
      auto st = make_multi_assign(std::move(parts));
      st->line = kl.line_no;
      out.push_back(st);
    }
    if (!open_var.empty())
      throw ParseError("missing 'enddo' for loop '" + open_var + "'", open_line);
    return out;
  }
};

}  // namespace

KernelProgram parse_kernel_lines(const std::vector<KernelLine>& lines) {
  LineParser lp{lines};
  lp.prog.stmts = lp.parse_block("", 0);
  return std::move(lp.prog);
}

KernelProgram parse_kernel(const std::string& text) {
  std::vector<KernelLine> lines;
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    lines.push_back({KernelLine::Kind::Text, line, n, MarkerKind::SplitPoint, {}, -1});
  }
  return parse_kernel_lines(lines);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void emit_stmt(std::ostringstream& os, const StmtPtr& s, int indent) {
  std::string pad(indent, ' ');
  switch (s->kind) {
    case Stmt::Kind::Do: {
      os << pad << "do " << s->var << " = " << expr_to_string(s->lo) << ", "
         << expr_to_string(s->hi);
      if (s->step) os << ", " << expr_to_string(s->step);
      os << "\n";
      for (const auto& b : s->body) emit_stmt(os, b, indent + 2);
      os << pad << "enddo\n";
      break;
    }
    case Stmt::Kind::Assign: {
      os << pad;
      for (size_t i = 0; i < s->assigns.size(); ++i) {
        if (i) os << "; ";
        os << expr_to_string(s->assigns[i].lhs) << " = " << expr_to_string(s->assigns[i].rhs);
      }
      os << "\n";
      break;
    }
    case Stmt::Kind::Passthrough:
      os << s->text << "\n";
      break;
    case Stmt::Kind::Marker:
    case Stmt::Kind::Hole:
      break;  // annotations do not appear in emitted variant code
  }
}

}  // namespace

std::string emit_source(const KernelProgram& prog) {
  std::ostringstream os;
  for (const auto& d : prog.decls) {
    os << "dimension " << d.name << "(";
    for (size_t i = 0; i < d.extents.size(); ++i) {
      if (i) os << ",";
      os << expr_to_string(d.extents[i]);
    }
    os << ")\n";
  }
  for (const auto& s : prog.stmts) emit_stmt(os, s, 0);
  return os.str();
}

}  // namespace oat
