#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>

#include "oat/param_store.hpp"

using namespace oat;

namespace {

ParamNode leaf(const std::string& k, ParamValue v) {
  ParamNode n;
  n.name = k;
  n.value = std::move(v);
  return n;
}

ParamNode group(const std::string& name, std::vector<ParamNode> children) {
  ParamNode n;
  n.name = name;
  n.children = std::move(children);
  return n;
}

}  // namespace

TEST_CASE("writer emits the canonical install-results listing byte for byte") {
  ParamTree t;
  t.roots.push_back(group("SetCacheParam", {leaf("CacheSize", 64LL), leaf("CacheLine", 8LL)}));
  CHECK(write_param_file(t) ==
        "(SetCacheParam\n"
        "  (CacheSize 64)\n"
        "  (CacheLine 8)\n"
        ")\n");
}

TEST_CASE("nested groups indent two spaces per level") {
  ParamTree t;
  ParamNode ctx = group("OAT_PROBSIZE", {leaf("MyMatMul_I", 4LL)});
  ctx.value = 1024LL;  // context group carries its own value
  t.roots.push_back(group("MyMatMul", {ctx}));
  CHECK(write_param_file(t) ==
        "(MyMatMul\n"
        "  (OAT_PROBSIZE 1024\n"
        "    (MyMatMul_I 4)\n"
        "  )\n"
        ")\n");
}

TEST_CASE("read/write round-trip is the identity") {
  const std::string text =
      "(MyMatMul\n"
      "  (OAT_PROBSIZE 1024\n"
      "    (MyMatMul_I 4)\n"
      "    (MyMatMul_J 2)\n"
      "  )\n"
      "  (OAT_PROBSIZE 3072\n"
      "    (MyMatMul_I 10)\n"
      "    (MyMatMul_J 1)\n"
      "  )\n"
      ")\n";
  ParamTree t = read_param_file(text);
  CHECK(write_param_file(t) == text);
  CHECK(tree_equal(t, read_param_file(write_param_file(t))));
}

TEST_CASE("random trees round-trip through write and read") {
  std::mt19937 rng(424242);
  std::function<ParamNode(int)> gen = [&](int depth) -> ParamNode {
    if (depth == 0 || rng() % 3 == 0)
      return leaf("K" + std::to_string(rng() % 100), static_cast<long long>(rng() % 1000));
    ParamNode g;
    g.name = "G" + std::to_string(rng() % 100);
    if (rng() % 2) g.value = static_cast<long long>(rng() % 50);
    int kids = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < kids; ++i) g.children.push_back(gen(depth - 1));
    return g;
  };
  for (int trial = 0; trial < 40; ++trial) {
    ParamTree t;
    t.roots.push_back(gen(3));
    std::string text = write_param_file(t);
    CAPTURE(text);
    CHECK(tree_equal(t, read_param_file(text)));
  }
}

TEST_CASE("value parsing distinguishes int, real, logical and string") {
  CHECK(parse_value("64") == ParamValue{64LL});
  CHECK(parse_value("3.5") == ParamValue{3.5});
  CHECK(parse_value("1.0d0") == ParamValue{1.0});
  CHECK(parse_value(".true.") == ParamValue{1LL});
  CHECK(parse_value(".false.") == ParamValue{0LL});
  CHECK(parse_value("hello") == ParamValue{std::string("hello")});
  CHECK(value_to_string(ParamValue{64LL}) == "64");
}

TEST_CASE("context-scoped lookup walks ordered (key, value) pairs") {
  const std::string text =
      "(MyMatMul\n"
      "  (OAT_PROBSIZE 1024\n"
      "    (MyMatMul_I 4)\n"
      "  )\n"
      "  (OAT_PROBSIZE 3072\n"
      "    (MyMatMul_I 10)\n"
      "  )\n"
      ")\n";
  ParamTree t = read_param_file(text);
  CHECK(lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", 3072}}) == ParamValue{10LL});
  CHECK(lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", 1024}}) == ParamValue{4LL});
  // Missing pieces name the full attempted path.
  CHECK_THROWS_AS(lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", 2048}}), ParamError);
  CHECK_THROWS_AS(lookup(t, "Elsewhere", "MyMatMul_I", {{"OAT_PROBSIZE", 1024}}), ParamError);
  CHECK_THROWS_AS(lookup(t, "MyMatMul", "MyMatMul_K", {{"OAT_PROBSIZE", 1024}}), ParamError);
}

TEST_CASE("reader reports duplicates and unbalanced parentheses with positions") {
  CHECK_THROWS_AS(read_param_file("(A\n  (x 1)\n  (x 2)\n)\n"), ParamError);
  CHECK_THROWS_AS(read_param_file("(A\n  (x 1)\n"), ParamError);
  CHECK_THROWS_AS(read_param_file("(A))\n"), ParamError);
  try {
    read_param_file("(A\n  (x 1)\n");
    CHECK(false);
  } catch (const ParamError& e) {
    CHECK(e.line > 0);
  }
}

TEST_CASE("stage access follows the three-level hierarchy") {
  // requesting own level or later-originating is fine; peeking at values
  // that only exist at a later stage is not.
  CHECK(check_stage_access(Stage::Install, Stage::Install));
  CHECK(check_stage_access(Stage::Static, Stage::Install));
  CHECK(check_stage_access(Stage::Static, Stage::Static));
  CHECK(check_stage_access(Stage::Dynamic, Stage::Install));
  CHECK(check_stage_access(Stage::Dynamic, Stage::Static));
  CHECK(check_stage_access(Stage::Dynamic, Stage::Dynamic));
  CHECK_FALSE(check_stage_access(Stage::Install, Stage::Static));
  CHECK_FALSE(check_stage_access(Stage::Install, Stage::Dynamic));
  CHECK_FALSE(check_stage_access(Stage::Static, Stage::Dynamic));
}

TEST_CASE("execution order requires basics and completed prior stages") {
  StageState s;
  // No basic parameters at all: install cannot run.
  CHECK(enforce_order(s, Stage::Install) == OrderCheck::ErrNoBp);
  CHECK(order_error_code(OrderCheck::ErrNoBp) == OAT_E_NOBP);

  s.basics["OAT_NUMPROCS"] = 4LL;
  s.basics["OAT_STARTTUNESIZE"] = 8LL;
  s.basics["OAT_ENDTUNESIZE"] = 16LL;
  CHECK(enforce_order(s, Stage::Install) == OrderCheck::ErrNoBp);  // still missing one
  s.basics["OAT_SAMPDIST"] = 8LL;
  CHECK(enforce_order(s, Stage::Install) == OrderCheck::Ok);

  // Static before install completes is an ordering error.
  CHECK(enforce_order(s, Stage::Static) == OrderCheck::ErrOrder);
  CHECK(order_error_code(OrderCheck::ErrOrder) == OAT_E_ORDER);
  s.completed.insert(Stage::Install);
  CHECK(enforce_order(s, Stage::Static) == OrderCheck::Ok);

  CHECK(enforce_order(s, Stage::Dynamic) == OrderCheck::ErrOrder);
  s.completed.insert(Stage::Static);
  CHECK(enforce_order(s, Stage::Dynamic) == OrderCheck::Ok);
}

TEST_CASE("the reserved word list is exactly the system names") {
  const auto& words = reserved_words();
  CHECK(words.size() == 15);
  for (const char* w :
       {"OAT_ALL", "OAT_INSTALL", "OAT_STATIC", "OAT_DYNAMIC", "OAT_AllRoutines",
        "OAT_InstallRoutines", "OAT_StaticRoutines", "OAT_DynamicRoutines", "OAT_NUMPROCS",
        "OAT_STARTTUNESIZE", "OAT_ENDTUNESIZE", "OAT_SAMPDIST", "OAT_TUNESTATIC",
        "OAT_TUNEDYNAMIC", "OAT_DEBUG"}) {
    CAPTURE(w);
    CHECK(is_reserved(w));
  }
  CHECK(is_reserved("oat_numprocs"));  // case-insensitive
  CHECK_FALSE(is_reserved("MyMatMul_I"));
  CHECK_FALSE(is_reserved("OAT_PROBSIZE"));
}

TEST_CASE("collisions force user values for already-set parameters") {
  ParamTree user = read_param_file(
      "(MyMatMul\n"
      "  (MyMatMul_I 12)\n"
      ")\n");
  auto cols = detect_collision(user, {{"MyMatMul", "MyMatMul_I"}, {"MyMatMul", "MyMatMul_J"}});
  REQUIRE(cols.size() == 1);
  CHECK(cols[0].region == "MyMatMul");
  CHECK(cols[0].param == "MyMatMul_I");
  CHECK(cols[0].forced_value == ParamValue{12LL});
}
