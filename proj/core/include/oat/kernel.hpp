#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// AST, parser and printer for the structured loop-nest kernel language.
// The language is deliberately small: DO loops, (multi-)assignments,
// dimension declarations and opaque passthrough lines. Identifiers are
// case-insensitive and normalized to lower case on parse.

namespace oat {

struct SourcePos {
  int line = 0;
  int col = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, int line, int col = 0)
      : std::runtime_error(format(msg, line, col)), line_(line), col_(col) {}
  int line() const { return line_; }

 private:
  static std::string format(const std::string& msg, int line, int col);
  int line_;
  int col_;
};

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ExprKind { IntLit, RealLit, ScalarRef, ArrayRef, Unary, Binary, Call };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  long long int_value = 0;
  double real_value = 0.0;
  std::string name;  // identifier for refs/calls, operator spelling for Unary/Binary
  std::vector<ExprPtr> args;
  SourcePos pos;
};

ExprPtr make_int(long long v);
ExprPtr make_real(double v);
ExprPtr make_scalar(std::string name);
ExprPtr make_array(std::string name, std::vector<ExprPtr> indices);
ExprPtr make_unary(std::string op, ExprPtr operand);
ExprPtr make_binary(std::string op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(std::string name, std::vector<ExprPtr> args);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::string expr_to_string(const ExprPtr& e);
ExprPtr parse_expression(const std::string& text, int line);

// Marker statements carry directive annotations through the statement
// stream so transforms can locate split points and rotation groups.
enum class MarkerKind {
  SplitPoint,
  CopyDefStart,
  CopyDefEnd,
  CopyInsert,
  RotationStart,
  RotationEnd,
};

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct AssignPart {
  ExprPtr lhs;  // ScalarRef or ArrayRef
  ExprPtr rhs;
};

struct Stmt {
  enum class Kind { Do, Assign, Passthrough, Marker, Hole } kind;

  // Do
  std::string var;
  ExprPtr lo, hi, step;  // step null means 1
  std::vector<StmtPtr> body;

  // Assign (one or more ';'-separated parts)
  std::vector<AssignPart> assigns;

  // Passthrough: the raw line, emitted verbatim, a no-op when interpreted
  std::string text;

  // Marker
  MarkerKind marker = MarkerKind::SplitPoint;
  std::vector<std::string> marker_vars;  // SplitPoint target loop vars, as written

  // Hole: placeholder for a nested tuning region (index into Region::children)
  int hole_index = -1;

  int line = 0;
};

StmtPtr make_do(std::string var, ExprPtr lo, ExprPtr hi, ExprPtr step,
                std::vector<StmtPtr> body);
StmtPtr make_assign(ExprPtr lhs, ExprPtr rhs);
StmtPtr make_multi_assign(std::vector<AssignPart> parts);
StmtPtr make_passthrough(std::string text);
StmtPtr make_marker(MarkerKind kind, std::vector<std::string> vars = {});
StmtPtr make_hole(int index);

StmtPtr clone_stmt(const StmtPtr& s);
bool stmt_equal(const StmtPtr& a, const StmtPtr& b);

struct ArrayDecl {
  std::string name;
  std::vector<ExprPtr> extents;  // rank <= 3
};

struct KernelProgram {
  std::vector<ArrayDecl> decls;
  std::vector<StmtPtr> stmts;
};

KernelProgram clone_program(const KernelProgram& p);
bool program_equal(const KernelProgram& a, const KernelProgram& b);

// A pre-classified input line for parsing region bodies that mix kernel
// text with directive-derived markers and nested-region holes.
struct KernelLine {
  enum class Kind { Text, Marker, Hole } kind = Kind::Text;
  std::string text;
  int line_no = 0;
  MarkerKind marker = MarkerKind::SplitPoint;
  std::vector<std::string> marker_vars;
  int hole_index = -1;
};

KernelProgram parse_kernel(const std::string& text);
KernelProgram parse_kernel_lines(const std::vector<KernelLine>& lines);

std::string emit_source(const KernelProgram& prog);

}  // namespace oat
