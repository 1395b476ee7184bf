#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "oat/directive.hpp"

using namespace oat;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(OAT_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Directive parse_one(const std::string& line) {
  auto ds = tokenize_directives(line);
  REQUIRE(ds.size() == 1);
  return ds[0];
}

}  // namespace

TEST_CASE("sentinel matching is case-insensitive and tolerates leading blanks") {
  std::string payload;
  CHECK(match_sentinel("!OAT$ install unroll region start", &payload));
  CHECK(payload == "install unroll region start");
  CHECK(match_sentinel("  !oat$ name Foo", &payload));
  CHECK(match_sentinel("!Oat$ number 2", &payload));
  CHECK_FALSE(match_sentinel("! OAT$ name Foo", &payload));
  CHECK_FALSE(match_sentinel("c OAT$ name Foo", &payload));
  CHECK_FALSE(match_sentinel("do i=1, n", &payload));
}

TEST_CASE("continuation lines join the preceding directive") {
  const std::string src =
      "!OAT$ parameter (in CacheSize, in OAT_PROBSIZE,\n"
      "!OAT$ &          in OAT_NUMPROC)\n";
  auto d = parse_one(src);
  auto* p = std::get_if<DirParameter>(&d.payload);
  REQUIRE(p != nullptr);
  REQUIRE(p->decls.size() == 3);
  CHECK(p->decls[0].name == "CacheSize");
  CHECK(p->decls[1].name == "OAT_PROBSIZE");
  CHECK(p->decls[2].name == "OAT_NUMPROC");
  CHECK(p->decls[0].attr == ParamDecl::Attr::In);
  CHECK(d.line_no == 1);
}

TEST_CASE("region markers parse at-type, feature and target params") {
  auto d = parse_one("!OAT$ static unroll (i, j) region start\n");
  auto* m = std::get_if<DirRegionMarker>(&d.payload);
  REQUIRE(m != nullptr);
  CHECK(m->at_type == AtType::Static);
  CHECK(m->feature == Feature::Unroll);
  CHECK(m->start);
  CHECK(m->target_params == std::vector<std::string>{"i", "j"});

  auto e = parse_one("!OAT$ install define ( CacheSize, CacheLine ) region end\n");
  auto* me = std::get_if<DirRegionMarker>(&e.payload);
  REQUIRE(me != nullptr);
  CHECK(me->at_type == AtType::Install);
  CHECK(me->feature == Feature::Define);
  CHECK_FALSE(me->start);
}

TEST_CASE("extended structural features parse as region markers") {
  auto d = parse_one("!OAT$ install LoopFusionSplit region start\n");
  CHECK(std::get<DirRegionMarker>(d.payload).feature == Feature::LoopFusionSplit);
  auto e = parse_one("!OAT$ install LoopFusion region end\n");
  CHECK(std::get<DirRegionMarker>(e.payload).feature == Feature::LoopFusion);
}

TEST_CASE("formula at-types are stored unevaluated") {
  auto d = parse_one("!OAT$ 2*n**3 unroll (i) region start\n");
  auto* m = std::get_if<DirRegionMarker>(&d.payload);
  REQUIRE(m != nullptr);
  CHECK(m->at_type == AtType::Formula);
  CHECK(m->formula_text == "2*n**3");
}

TEST_CASE("name, number, debug and search subtypes") {
  CHECK(std::get<DirName>(parse_one("!OAT$ name MyMatMul\n").payload).value == "MyMatMul");
  CHECK(std::get<DirNumber>(parse_one("!OAT$ number 3\n").payload).value == 3);
  CHECK(std::get<DirDebug>(parse_one("!OAT$ debug (pp, max)\n").payload).items ==
        std::vector<std::string>{"pp", "max"});
  CHECK(std::get<DirSearch>(parse_one("!OAT$ search Brute-force\n").payload).method ==
        SearchMethod::Exhaustive);
  CHECK(std::get<DirSearch>(parse_one("!OAT$ search AD-HOC\n").payload).method ==
        SearchMethod::AdHoc);
  CHECK_THROWS_AS(parse_one("!OAT$ search simulated-annealing\n"), ParseError);
}

TEST_CASE("parameter attributes in, out and bp") {
  auto d = parse_one("!OAT$ parameter (out CacheSize, bp n, eps)\n");
  auto decls = std::get<DirParameter>(d.payload).decls;
  REQUIRE(decls.size() == 3);
  CHECK(decls[0].attr == ParamDecl::Attr::Out);
  CHECK(decls[1].attr == ParamDecl::Attr::Bp);
  CHECK(decls[2].attr == ParamDecl::Attr::In);  // default
}

TEST_CASE("varied clause with parameter list and range") {
  auto d = parse_one("!OAT$ varied (i, j) from 1 to 16\n");
  auto spec = std::get<DirVaried>(d.payload).spec;
  CHECK(spec.params == std::vector<std::string>{"i", "j"});
  CHECK(spec.lo == 1);
  CHECK(spec.hi == 16);

  auto e = parse_one("!OAT$ varied 1 from 16\n");  // shorthand over target params
  auto sp = std::get<DirVaried>(e.payload).spec;
  CHECK(sp.params.empty());
  CHECK(sp.lo == 1);
  CHECK(sp.hi == 16);

  CHECK_THROWS_AS(parse_one("!OAT$ varied (i) from 9 to 3\n"), ParseError);
}

TEST_CASE("fitting clause variants") {
  auto d = parse_one("!OAT$ fitting least-squares 5 sampled (1-5, 8, 16)\n");
  auto spec = std::get<DirFitting>(d.payload).spec;
  CHECK(spec.method.kind == FitMethod::Kind::LeastSquares);
  CHECK(spec.method.order == 5);
  REQUIRE(spec.sample_text.has_value());
  CHECK(*spec.sample_text == "1-5, 8, 16");

  auto a = std::get<DirFitting>(parse_one("!OAT$ fitting auto\n").payload).spec;
  CHECK(a.method.kind == FitMethod::Kind::Auto);

  auto s = std::get<DirFitting>(parse_one("!OAT$ fitting auto sampled auto\n").payload).spec;
  CHECK(s.sample_auto);

  auto u = std::get<DirFitting>(
               parse_one("!OAT$ fitting user-defined a*x**2 + b sampled (1, 2, 4)\n").payload)
               .spec;
  CHECK(u.method.kind == FitMethod::Kind::UserDefined);
  REQUIRE(u.method.expr != nullptr);

  CHECK(std::get<DirFitting>(parse_one("!OAT$ fitting dspline sampled (1-4)\n").payload)
            .spec.method.kind == FitMethod::Kind::Dspline);
  CHECK_THROWS_AS(parse_one("!OAT$ fitting least-squares 2\n"), ParseError);  // scope required
}

TEST_CASE("according estimated with continuations") {
  const std::string src =
      "!OAT$ according estimated\n"
      "!OAT$ &          2.0d0*CacheSize*OAT_PROBSIZE*OAT_PROBSIZE\n"
      "!OAT$ &          / (3.0d0*OAT_NUMPROC)\n";
  auto spec = std::get<DirAccording>(parse_one(src).payload).spec;
  CHECK(spec.estimated);
  REQUIRE(spec.cost != nullptr);
}

TEST_CASE("according min/condition chains") {
  auto spec = std::get<DirAccording>(
                  parse_one("!OAT$ according min (eps) .and. condition ( iter < 5 )\n").payload)
                  .spec;
  CHECK_FALSE(spec.estimated);
  REQUIRE(spec.clauses.size() == 2);
  CHECK(spec.clauses[0].is_min);
  CHECK(spec.clauses[0].min_param == "eps");
  CHECK_FALSE(spec.clauses[1].is_min);
  REQUIRE(spec.clauses[1].condition != nullptr);
  REQUIRE(spec.connectors.size() == 1);
  CHECK(spec.connectors[0] == ".and.");

  CHECK_THROWS_AS(parse_one("!OAT$ according min (a) .xor. min (b)\n"), ParseError);
}

TEST_CASE("sub-region and split markers") {
  CHECK(std::get<DirSubRegion>(parse_one("!OAT$ select sub region start\n").payload).kind ==
        DirSubRegion::Kind::Select);
  CHECK(std::get<DirSubRegion>(parse_one("!OAT$ prepro sub region start\n").payload).kind ==
        DirSubRegion::Kind::Prepro);
  CHECK(std::get<DirSubRegion>(parse_one("!OAT$ postpro sub region end\n").payload).kind ==
        DirSubRegion::Kind::Postpro);
  CHECK(std::get<DirSubRegion>(parse_one("!OAT$ RotationOrder sub region start\n").payload).kind ==
        DirSubRegion::Kind::Rotation);
  CHECK(std::get<DirSubRegion>(parse_one("!OAT$ SplitPointCopyDef region start\n").payload).kind ==
        DirSubRegion::Kind::CopyDef);
  CHECK(std::get<DirSplitPoint>(parse_one("!OAT$ SplitPoint (K, J, I)\n").payload).vars ==
        std::vector<std::string>{"K", "J", "I"});
  CHECK(std::holds_alternative<DirCopyInsert>(
      parse_one("!OAT$ SplitPointCopyInsert\n").payload));
}

TEST_CASE("runtime calls and assignments") {
  auto c = std::get<DirCall>(
      parse_one("!OAT$ call OAT_ATexec(OAT_STATIC, OAT_StaticRoutines)\n").payload);
  CHECK(c.proc == "oat_atexec");
  REQUIRE(c.args.size() == 2);
  CHECK(c.args[0] == "OAT_STATIC");

  auto q = std::get<DirCall>(parse_one("!OAT$ call OAT_BPsetVal(\"nprocs\")\n").payload);
  CHECK(q.proc == "oat_bpsetval");
  CHECK(q.args == std::vector<std::string>{"nprocs"});  // quotes stripped

  auto a = std::get<DirAssign>(parse_one("!OAT$ OAT_NUMPROCS = 4\n").payload);
  CHECK(a.name == "OAT_NUMPROCS");
  CHECK(a.value == "4");
}

TEST_CASE("fixture corpus tokenizes cleanly") {
  for (const char* f : {"sample1.f", "sample2.f", "sample3.f", "sample4a.f", "sample4b.f",
                        "sample4c.f", "sample5.f", "sample6.f", "sample8.f", "sample9.f",
                        "sample10.f", "e2e.f"}) {
    CAPTURE(f);
    CHECK_NOTHROW(tokenize_directives(fixture(f)));
  }
}

TEST_CASE("emit_directives round-trips payloads") {
  auto ds = tokenize_directives(fixture("sample1.f"));
  std::string emitted = emit_directives(ds);
  auto ds2 = tokenize_directives(emitted);
  REQUIRE(ds2.size() == ds.size());
  CHECK(emit_directives(ds2) == emitted);
}
