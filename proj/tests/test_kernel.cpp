#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oat/interp.hpp"
#include "oat/kernel.hpp"

using namespace oat;

namespace {

double eval(const std::string& text, std::map<std::string, double> scalars = {}) {
  ExprPtr e = parse_expression(text, 1);
  ExecEnv env;
  env.scalars = std::move(scalars);
  return eval_expr(e, env);
}

}  // namespace

TEST_CASE("expression precedence and associativity") {
  CHECK(eval("1 + 2 * 3") == doctest::Approx(7.0));
  CHECK(eval("(1 + 2) * 3") == doctest::Approx(9.0));
  CHECK(eval("2 ** 3 ** 2") == doctest::Approx(512.0));  // right-assoc
  CHECK(eval("8 / 4 / 2") == doctest::Approx(1.0));      // left-assoc
  CHECK(eval("10 - 3 - 2") == doctest::Approx(5.0));
  CHECK(eval("-2 ** 2") == doctest::Approx(-4.0));
  CHECK(eval("1 - -1") == doctest::Approx(2.0));
}

TEST_CASE("numeric literal forms") {
  CHECK(eval("2.0d0") == doctest::Approx(2.0));
  CHECK(eval("1.5D1") == doctest::Approx(15.0));
  CHECK(eval("3.0e-1") == doctest::Approx(0.3));
  CHECK(eval("2.0_PN") == doctest::Approx(2.0));  // kind suffix ignored
  CHECK(eval("42") == doctest::Approx(42.0));
}

TEST_CASE("intrinsic calls") {
  CHECK(eval("dlog(100.0)") == doctest::Approx(std::log(100.0)));
  CHECK(eval("mod(17, 5)") == doctest::Approx(2.0));
  CHECK(eval("int(3.7)") == doctest::Approx(3.0));
  CHECK(eval("min(4, 9)") == doctest::Approx(4.0));
  CHECK(eval("max(4, 9)") == doctest::Approx(9.0));
  CHECK(eval("abs(-16.0)") == doctest::Approx(16.0));
}

TEST_CASE("scalar references are case-insensitive") {
  CHECK(eval("CacheSize * 2", {{"cachesize", 64.0}}) == doctest::Approx(128.0));
}

TEST_CASE("comparison operators used in conditions") {
  CHECK(eval("3 < 5") == doctest::Approx(1.0));
  CHECK(eval("5 < 3") == doctest::Approx(0.0));
  CHECK(eval("5 >= 5") == doctest::Approx(1.0));
}

TEST_CASE("parse and emit round-trips a matmul nest") {
  const std::string src =
      "do i=1, n\n"
      "  do j=1, n\n"
      "    do k=1, n\n"
      "      A(i, j) = A(i, j) + B(i, k) * C(k, j)\n"
      "    enddo\n"
      "  enddo\n"
      "enddo\n";
  KernelProgram p1 = parse_kernel(src);
  std::string emitted = emit_source(p1);
  KernelProgram p2 = parse_kernel(emitted);
  CHECK(program_equal(p1, p2));
  CHECK(emit_source(p2) == emitted);  // emission is a fixed point
}

TEST_CASE("kernel structure of a triple nest") {
  KernelProgram p = parse_kernel(
      "do i=1, n\n  do j=1, n\n    x(i, j) = 0.0\n  enddo\nenddo\n");
  REQUIRE(p.stmts.size() == 1);
  CHECK(p.stmts[0]->kind == Stmt::Kind::Do);
  CHECK(p.stmts[0]->var == "i");
  REQUIRE(p.stmts[0]->body.size() == 1);
  CHECK(p.stmts[0]->body[0]->var == "j");
  CHECK(p.stmts[0]->body[0]->body[0]->kind == Stmt::Kind::Assign);
}

TEST_CASE("semicolon multi-assignments parse as one statement") {
  KernelProgram p = parse_kernel("a = 1.0; b = 2.0; c = a + b\n");
  REQUIRE(p.stmts.size() == 1);
  CHECK(p.stmts[0]->assigns.size() == 3);
  ExecEnv env;
  interpret(p, env);
  CHECK(env.scalars.at("c") == doctest::Approx(3.0));
}

TEST_CASE("do loop with explicit step") {
  KernelProgram p = parse_kernel("do i=1, 10, 3\n  s = s + i\nenddo\n");
  ExecEnv env;
  env.scalars["s"] = 0.0;
  ExecStats st = interpret(p, env);
  CHECK(env.scalars["s"] == doctest::Approx(1 + 4 + 7 + 10));
  CHECK(st.assigns == 4);
}

TEST_CASE("passthrough lines are kept verbatim and ignored by the interpreter") {
  const std::string src = "!$omp parallel do\ndo i=1, 4\n  s = s + 1.0\nenddo\n!$omp end parallel do\n";
  KernelProgram p = parse_kernel(src);
  CHECK(p.stmts.front()->kind == Stmt::Kind::Passthrough);
  CHECK(emit_source(p).find("!$omp parallel do") != std::string::npos);
  ExecEnv env;
  env.scalars["s"] = 0.0;
  interpret(p, env);
  CHECK(env.scalars["s"] == doctest::Approx(4.0));
}

TEST_CASE("dimension declarations allocate dense arrays") {
  KernelProgram p = parse_kernel(
      "dimension a(n, n)\ndo i=1, n\n  do j=1, n\n    a(i, j) = i + j\n  enddo\nenddo\n");
  REQUIRE(p.decls.size() == 1);
  ExecEnv env;
  env.scalars["n"] = 3.0;
  allocate_declared(p, env);
  interpret(p, env);
  const auto& a = env.arrays.at("a");
  CHECK(a.extents == std::vector<long long>{3, 3});
  CHECK(a.data[0] == doctest::Approx(2.0));   // a(1,1)
  CHECK(a.data[8] == doctest::Approx(6.0));   // a(3,3)
}

TEST_CASE("auto-allocate sparse storage for undeclared arrays") {
  KernelProgram p = parse_kernel("do i=1, 3\n  q(i) = q(i) + i\nenddo\n");
  ExecEnv env;
  env.auto_allocate = true;
  env.scalars["n"] = 3.0;
  interpret(p, env);
  CHECK(env.sparse.at("q").at({2, 0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("deterministic measurement counts executed assignments") {
  KernelProgram p = parse_kernel(
      "do i=1, n\n  do j=1, n\n    do k=1, n\n      a(i, j) = a(i, j) + b(i, k) * c(k, j)\n    enddo\n  enddo\nenddo\n");
  ExecEnv env;
  env.auto_allocate = true;
  env.scalars["n"] = 8.0;
  CHECK(measure(p, env, 1, MeasureMode::Deterministic) == doctest::Approx(512.0));
}

TEST_CASE("clone and equality") {
  KernelProgram p = parse_kernel("do i=1, n\n  a(i) = b(i) * 2.0\nenddo\n");
  KernelProgram q = clone_program(p);
  CHECK(program_equal(p, q));
  q.stmts[0]->var = "j";
  CHECK_FALSE(program_equal(p, q));
}

TEST_CASE("parse errors carry a line number") {
  CHECK_THROWS_AS(parse_kernel("do i=1, n\n  a(i) = 1.0\n"), ParseError);  // missing enddo
  CHECK_THROWS_AS(parse_kernel("enddo\n"), ParseError);
  CHECK_THROWS_AS(parse_expression("1 +", 7), ParseError);
  try {
    parse_expression("1 + * 2", 7);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
}

TEST_CASE("envs_equal compares dense arrays with relative tolerance") {
  ExecEnv a, b;
  a.arrays["x"] = {{4}, {1.0, 2.0, 3.0, 4.0}};
  b.arrays["x"] = {{4}, {1.0, 2.0, 3.0, 4.0}};
  b.scalars["i"] = 99.0;  // loop counters may differ between variants
  CHECK(envs_equal(a, b));
  b.arrays["x"].data[2] = 3.0 + 1e-6;
  CHECK_FALSE(envs_equal(a, b));
}
