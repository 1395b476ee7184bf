#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "oat/region.hpp"

using namespace oat;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(OAT_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ProgramUnit parse_fixture(const std::string& name) { return parse_unit(fixture(name)); }

// Minimal annotated region text for nesting-legality probes.
std::string region_text(const std::string& at, const std::string& feat,
                        const std::string& inner = "") {
  std::string params = feat == "define" ? " ( x )" : " (i)";
  std::string s = "!OAT$ " + at + " " + feat + params + " region start\n";
  if (feat == "unroll" || feat == "variable") s += "!OAT$ varied (i) from 1 to 2\n";
  if (feat == "select") s += "!OAT$ select sub region start\n";
  s += inner;
  s += "x = x + 1.0\n";
  if (feat == "select") s += "!OAT$ select sub region end\n";
  s += "!OAT$ " + at + " " + feat + params + " region end\n";
  return s;
}

bool nests_ok(const std::string& outer_at, const std::string& outer_feat,
              const std::string& inner_at, const std::string& inner_feat) {
  ProgramUnit u = parse_unit(region_text(outer_at, outer_feat,
                                         region_text(inner_at, inner_feat)));
  return validate_nesting(u).empty();
}

}  // namespace

TEST_CASE("single region parses with all subtypes attached") {
  ProgramUnit u = parse_fixture("sample1.f");
  REQUIRE(u.regions.size() == 1);
  const Region& r = u.regions[0];
  CHECK(r.at_type == AtType::Install);
  CHECK(r.feature == Feature::Unroll);
  CHECK(r.name == "MyMatMul");
  CHECK(r.named);
  REQUIRE(r.varied.has_value());
  CHECK(r.varied->params == std::vector<std::string>{"i", "j"});
  CHECK(r.varied->lo == 1);
  CHECK(r.varied->hi == 16);
  REQUIRE(r.fitting.has_value());
  CHECK(r.fitting->method.order == 5);
  CHECK(r.debug_items == std::vector<std::string>{"pp"});
  REQUIRE(r.body.stmts.size() == 1);
  CHECK(r.body.stmts[0]->kind == Stmt::Kind::Do);
}

TEST_CASE("define regions record out parameters and body assignments") {
  ProgramUnit u = parse_fixture("sample2.f");
  REQUIRE(u.regions.size() == 1);
  const Region& r = u.regions[0];
  CHECK(r.feature == Feature::Define);
  REQUIRE(r.params.size() == 2);
  CHECK(r.params[0].attr == ParamDecl::Attr::Out);
  CHECK(r.body.stmts.size() == 2);
}

TEST_CASE("select regions collect branches and per-branch according specs") {
  ProgramUnit u = parse_fixture("sample5.f");
  REQUIRE(u.regions.size() == 1);
  const Region& r = u.regions[0];
  CHECK(r.feature == Feature::Select);
  REQUIRE(r.select_branches.size() == 2);
  REQUIRE(r.select_branches[0].according.has_value());
  CHECK(r.select_branches[0].according->estimated);
  REQUIRE(r.select_branches[1].according.has_value());
}

TEST_CASE("region-level according on a dynamic select") {
  ProgramUnit u = parse_fixture("sample6.f");
  const Region& r = u.regions.at(0);
  CHECK(r.at_type == AtType::Dynamic);
  REQUIRE(r.according.has_value());
  CHECK(r.according->clauses.size() == 2);
  CHECK(r.select_branches.size() == 2);
}

TEST_CASE("structural feature bodies keep markers and passthrough lines") {
  ProgramUnit u = parse_fixture("sample8.f");
  const Region& r = u.regions.at(0);
  CHECK(r.feature == Feature::LoopFusionSplit);
  int markers = 0;
  // The split markers live inside the innermost loop body.
  const StmtPtr* k = &r.body.stmts[1];  // stmts[0] is the !$omp passthrough
  const auto& inner = (*k)->body[0]->body[0]->body;
  for (const auto& s : inner)
    if (s->kind == Stmt::Kind::Marker) ++markers;
  CHECK(markers == 4);  // CopyDefStart, CopyDefEnd, SplitPoint, CopyInsert
}

TEST_CASE("nested regions become holes indexed into children") {
  ProgramUnit u = parse_fixture("sample10.f");
  REQUIRE(u.regions.size() == 1);
  const Region& outer = u.regions[0];
  CHECK(outer.feature == Feature::Variable);
  CHECK(outer.name == "ABlockRoutine");
  REQUIRE(outer.children.size() == 2);
  CHECK(outer.children[0].name == "Kernel1");
  CHECK(outer.children[1].name == "Kernel2");
  int holes = 0;
  for (const auto& s : outer.body.stmts)
    if (s->kind == Stmt::Kind::Hole) ++holes;
  CHECK(holes == 2);
}

TEST_CASE("directive ops are collected in source order") {
  ProgramUnit u = parse_fixture("sample3.f");
  REQUIRE(u.ops.size() == 6);
  CHECK(std::holds_alternative<DirAssign>(u.ops[0].op));
  CHECK(std::get<DirAssign>(u.ops[0].op).name == "OAT_TUNESTATIC");
  CHECK(std::holds_alternative<DirCall>(u.ops[5].op));
  CHECK(std::get<DirCall>(u.ops[5].op).proc == "oat_atexec");
}

TEST_CASE("unnamed regions synthesize stable names") {
  ProgramUnit u = parse_unit(region_text("install", "define"));
  REQUIRE(u.regions.size() == 1);
  CHECK_FALSE(u.regions[0].named);
  CHECK_FALSE(u.regions[0].name.empty());
}

TEST_CASE("at-type nesting legality matrix") {
  // Rows: outer; columns: inner. A region may wrap regions of its own or
  // an earlier tuning stage (those results exist by the time it is tuned).
  CHECK(at_type_nest_allowed(AtType::Install, AtType::Install));
  CHECK(at_type_nest_allowed(AtType::Static, AtType::Install));
  CHECK(at_type_nest_allowed(AtType::Static, AtType::Static));
  CHECK(at_type_nest_allowed(AtType::Dynamic, AtType::Install));
  CHECK(at_type_nest_allowed(AtType::Dynamic, AtType::Static));
  CHECK(at_type_nest_allowed(AtType::Dynamic, AtType::Dynamic));
  CHECK_FALSE(at_type_nest_allowed(AtType::Install, AtType::Static));
  CHECK_FALSE(at_type_nest_allowed(AtType::Install, AtType::Dynamic));
  CHECK_FALSE(at_type_nest_allowed(AtType::Static, AtType::Dynamic));
}

TEST_CASE("feature nesting legality matrix") {
  // Features that own their loop nest (unroll and the loop transforms)
  // may not contain other regions; the rest may contain anything.
  CHECK(feature_nest_allowed(Feature::Variable, Feature::Unroll));
  CHECK(feature_nest_allowed(Feature::Variable, Feature::Select));
  CHECK(feature_nest_allowed(Feature::Variable, Feature::Variable));
  CHECK(feature_nest_allowed(Feature::Select, Feature::Unroll));
  CHECK(feature_nest_allowed(Feature::Define, Feature::Define));
  CHECK_FALSE(feature_nest_allowed(Feature::Unroll, Feature::Unroll));
  CHECK_FALSE(feature_nest_allowed(Feature::Unroll, Feature::Variable));
  CHECK_FALSE(feature_nest_allowed(Feature::LoopFusionSplit, Feature::Unroll));
  CHECK_FALSE(feature_nest_allowed(Feature::LoopFusion, Feature::Select));
}

TEST_CASE("nesting validation end to end") {
  CHECK(nests_ok("static", "variable", "static", "unroll"));
  CHECK(nests_ok("dynamic", "variable", "static", "unroll"));
  CHECK_FALSE(nests_ok("static", "unroll", "static", "unroll"));
  CHECK_FALSE(nests_ok("install", "variable", "static", "unroll"));
}

TEST_CASE("depth limit of three levels") {
  std::string three = region_text("install", "variable",
                        region_text("install", "variable",
                          region_text("install", "unroll")));
  CHECK(validate_nesting(parse_unit(three)).empty());
  std::string four = region_text("install", "variable",
                       region_text("install", "variable",
                         region_text("install", "variable",
                           region_text("install", "unroll"))));
  auto v = validate_nesting(parse_unit(four));
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].rule.find("depth") != std::string::npos);
}

TEST_CASE("explicit parameter declarations win over inference") {
  ProgramUnit u = parse_fixture("sample4b.f");
  auto decls = resolve_parameters(u.regions.at(0));
  REQUIRE(decls.size() == 1);
  CHECK(decls[0].name == "n");
  CHECK(decls[0].attr == ParamDecl::Attr::Bp);
}

TEST_CASE("single free loop-bound variable infers the default BP") {
  ProgramUnit u = parse_fixture("sample4a.f");
  auto decls = resolve_parameters(u.regions.at(0));
  REQUIRE(decls.size() == 1);
  CHECK(decls[0].name == "n");
  CHECK(decls[0].attr == ParamDecl::Attr::Bp);
}

TEST_CASE("multiple free loop-bound variables without declarations is ambiguous") {
  ProgramUnit u = parse_fixture("sample4b_ambiguous.f");
  auto vars = loop_bound_variables(u.regions.at(0));
  CHECK(vars == std::vector<std::string>{"n", "nprocs"});
  CHECK_THROWS_AS(resolve_parameters(u.regions.at(0)), AmbiguousBpError);
}

TEST_CASE("random region trees respect parse/validate invariants") {
  // Property: any tree generated from the legal nesting tables validates
  // cleanly, and region counts match what was generated.
  std::mt19937 rng(20260826);
  const char* ats[] = {"install", "static", "dynamic"};
  const char* feats[] = {"variable", "unroll", "select", "define"};
  auto at_level = [](const std::string& a) { return a == "install" ? 1 : a == "static" ? 2 : 3; };
  for (int trial = 0; trial < 25; ++trial) {
    int depth = 1 + static_cast<int>(rng() % 3);
    std::string text;
    int count = 0;
    // Build an inside-out chain obeying both tables.
    std::string inner_at = ats[rng() % 3];
    std::string inner_feat = depth > 1 ? feats[rng() % 2] /* variable|unroll leaf ok */
                                       : feats[rng() % 4];
    text = region_text(inner_at, inner_feat);
    ++count;
    for (int d = 1; d < depth; ++d) {
      // Outer must be variable (may contain anything) at a stage >= inner's.
      std::string outer_at;
      do { outer_at = ats[rng() % 3]; } while (at_level(outer_at) < at_level(inner_at));
      text = region_text(outer_at, "variable", text);
      inner_at = outer_at;
      ++count;
    }
    CAPTURE(text);
    ProgramUnit u = parse_unit(text);
    CHECK(validate_nesting(u).empty());
    int total = 0;
    std::function<void(const Region&)> walk = [&](const Region& r) {
      ++total;
      for (const auto& c : r.children) walk(c);
    };
    for (const auto& r : u.regions) walk(r);
    CHECK(total == count);
  }
}

TEST_CASE("subtype legality per feature") {
  CHECK(subtype_allowed(Feature::Unroll, "varied"));
  CHECK(subtype_allowed(Feature::Unroll, "fitting"));
  CHECK(subtype_allowed(Feature::Select, "according"));
  CHECK_FALSE(subtype_allowed(Feature::Define, "varied"));
  CHECK_FALSE(subtype_allowed(Feature::Unroll, "according"));
}
