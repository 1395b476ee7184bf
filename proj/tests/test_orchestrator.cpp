#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "oat/orchestrator.hpp"

using namespace oat;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(OAT_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh working directory with small-grid basic parameters preloaded.
struct TuneDir {
  fs::path dir;
  explicit TuneDir(const std::string& tag) {
    dir = fs::temp_directory_path() / ("oat_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const char* f :
         {"OAT_InstallParamDef.dat", "OAT_StaticParamDef.dat", "OAT_DynamicParamDef.dat"}) {
      std::ofstream out(dir / f);
      out << "(BasicParam\n"
             "  (OAT_NUMPROCS 4)\n"
             "  (OAT_STARTTUNESIZE 8)\n"
             "  (OAT_ENDTUNESIZE 16)\n"
             "  (OAT_SAMPDIST 8)\n"
             ")\n";
    }
  }
  ~TuneDir() { fs::remove_all(dir); }
  std::string path() const { return dir.string(); }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  bool has(const std::string& name) const { return fs::exists(dir / name); }
};

OrchestratorOptions options(const TuneDir& d) {
  OrchestratorOptions opt;
  opt.dir = d.path();
  return opt;
}

}  // namespace

TEST_CASE("define regions execute once and export their out parameters") {
  TuneDir d("define");
  Orchestrator orch(parse_unit(fixture("sample2.f")), options(d));
  TuningReport rep = orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].evaluations == 1);
  CHECK(rep.regions[0].chosen.at("CacheSize") == ParamValue{64LL});
  CHECK(rep.regions[0].chosen.at("CacheLine") == ParamValue{8LL});
  REQUIRE(d.has("OAT_InstallParamSetCacheParam.dat"));
  ParamTree t = read_param_file(d.read("OAT_InstallParamSetCacheParam.dat"));
  CHECK(lookup(t, "SetCacheParam", "CacheSize") == ParamValue{64LL});
  CHECK(lookup(t, "SetCacheParam", "CacheLine") == ParamValue{8LL});
}

TEST_CASE("install unroll with fitting samples per dimension and persists per context") {
  TuneDir d("fit");
  ProgramUnit u = parse_unit(fixture("sample1.f"));
  Orchestrator orch(std::move(u), options(d));
  // Two contexts (problem sizes 8 and 16), 7 samples for j then 7 for i.
  CHECK(orch.predict_evaluations(OAT_INSTALL) == 2 * (7 + 7));
  TuningReport rep = orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].evaluations == 28);
  CHECK(orch.trace().size() == 28);

  REQUIRE(d.has("OAT_InstallParamMyMatMul.dat"));
  ParamTree t = read_param_file(d.read("OAT_InstallParamMyMatMul.dat"));
  for (long long p : {8, 16}) {
    ParamValue vi = lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", p}});
    ParamValue vj = lookup(t, "MyMatMul", "MyMatMul_J", {{"OAT_PROBSIZE", p}});
    long long i = std::get<long long>(vi), j = std::get<long long>(vj);
    CHECK(i >= 1);
    CHECK(i <= 16);
    CHECK(j >= 1);
    CHECK(j <= 16);
  }
}

TEST_CASE("install regions tune once; OAT_InstallInit forces a retune") {
  TuneDir d("once");
  Orchestrator orch(parse_unit(fixture("sample2.f")), options(d));
  TuningReport r1 = orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK(r1.total_evaluations == 1);
  TuningReport r2 = orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK(r2.total_evaluations == 0);  // already tuned, skipped
  orch.install_init();
  TuningReport r3 = orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK(r3.total_evaluations == 1);
}

TEST_CASE("prior install results on disk count as completed work") {
  TuneDir d("resume");
  {
    Orchestrator first(parse_unit(fixture("sample2.f")), options(d));
    first.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  }
  Orchestrator second(parse_unit(fixture("sample2.f")), options(d));
  TuningReport rep = second.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK(rep.total_evaluations == 0);
}

TEST_CASE("static tuning without a completed install stage is an ordering error") {
  TuneDir d("order");
  Orchestrator orch(parse_unit(fixture("sample4a.f")), options(d));
  try {
    orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
    CHECK(false);
  } catch (const OrchestratorError& e) {
    CHECK(e.code == OAT_E_ORDER);
  }
}

TEST_CASE("missing basic parameters reject tuning with the dedicated code") {
  TuneDir d("nobp");
  fs::remove(d.dir / "OAT_InstallParamDef.dat");  // no basics anywhere
  fs::remove(d.dir / "OAT_StaticParamDef.dat");
  fs::remove(d.dir / "OAT_DynamicParamDef.dat");
  Orchestrator orch(parse_unit(fixture("sample2.f")), options(d));
  try {
    orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
    CHECK(false);
  } catch (const OrchestratorError& e) {
    CHECK(e.code == OAT_E_NOBP);
  }
}

TEST_CASE("static unroll searches exhaustively per problem-size context") {
  TuneDir d("static");
  ProgramUnit u = parse_unit(fixture("sample4a.f"));
  u.regions[0].varied->hi = 4;  // 4x4 grid keeps the run fast
  Orchestrator orch(std::move(u), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");  // no install regions; marks stage done
  CHECK(orch.predict_evaluations(OAT_STATIC) == 2 * 16);
  TuningReport rep = orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].evaluations == 32);

  ParamTree t = read_param_file(d.read("OAT_StaticParamMyMatMul.dat"));
  // The deterministic cost model rewards unrolling the innermost varied
  // loop (fewer j iterations) while outer unrolling only adds replicated
  // inner-loop overhead, so (I 1)(J 4) wins at both problem sizes.
  for (long long p : {8, 16}) {
    CHECK(lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", p}}) == ParamValue{1LL});
    CHECK(lookup(t, "MyMatMul", "MyMatMul_J", {{"OAT_PROBSIZE", p}}) == ParamValue{4LL});
  }
  // Static listings carry the relevant basics at the top level.
  CHECK(lookup(t, "MyMatMul", "OAT_NUMPROCS") == ParamValue{4LL});
  CHECK(lookup(t, "MyMatMul", "OAT_SAMPDIST") == ParamValue{8LL});
}

TEST_CASE("user-set parameter values collide and are forced, not searched") {
  TuneDir d("collide");
  {
    std::ofstream out(d.dir / "OAT_StaticParamDefMyMatMul.dat");
    out << "(MyMatMul\n  (MyMatMul_I 3)\n)\n";
  }
  ProgramUnit u = parse_unit(fixture("sample4a.f"));
  u.regions[0].varied->hi = 4;
  Orchestrator orch(std::move(u), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  TuningReport rep = orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  REQUIRE(rep.regions.size() == 1);
  REQUIRE(rep.regions[0].collisions.size() == 1);
  CHECK(rep.regions[0].collisions[0].param == "MyMatMul_I");
  CHECK(rep.regions[0].evaluations == 2 * 4);  // only the j dimension searched
  ParamTree t = read_param_file(d.read("OAT_StaticParamMyMatMul.dat"));
  for (long long p : {8, 16})
    CHECK(lookup(t, "MyMatMul", "MyMatMul_I", {{"OAT_PROBSIZE", p}}) == ParamValue{3LL});
}

TEST_CASE("estimated select evaluates the cost expression per branch") {
  TuneDir d("select");
  // The define region provides CacheSize at install time; the static
  // select reads it through the stage hierarchy.
  ProgramUnit u = parse_unit(fixture("sample2.f") + fixture("sample5.f"));
  Orchestrator orch(std::move(u), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK(orch.predict_evaluations(OAT_STATIC) == 2 * 2);  // 2 branches x 2 contexts
  TuningReport rep = orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].evaluations == 4);
  // At both sizes 4*C*P*log(P)/(2*N) < 2*C*P*P/(3*N): branch 2 wins.
  ParamTree t = read_param_file(d.read("OAT_StaticParamATfromCacheSize.dat"));
  for (long long p : {8, 16})
    CHECK(lookup(t, "ATfromCacheSize", "ATfromCacheSize_SELECT", {{"OAT_PROBSIZE", p}}) ==
          ParamValue{2LL});
}

TEST_CASE("dynamic select arms at OAT_ATexec and tunes at invocation") {
  TuneDir d("dynamic");
  Orchestrator orch(parse_unit(fixture("sample6.f")), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  TuningReport rep = orch.at_exec(OAT_DYNAMIC, "OAT_DynamicRoutines");
  CHECK(rep.total_evaluations == 0);  // armed only, no work yet
  CHECK(orch.is_armed("PricondSelect"));

  RegionReport rr = orch.invoke_dynamic("PricondSelect");
  // min(eps) .and. (iter < 5): branch 2 has smaller eps but fails the
  // condition, so branch 1 is selected.
  CHECK(rr.chosen.at("PricondSelect_SELECT") == ParamValue{1LL});
  CHECK(rr.evaluations == 2);
}

TEST_CASE("invoking an un-armed run-time region is an error") {
  TuneDir d("unarmed");
  Orchestrator orch(parse_unit(fixture("sample6.f")), options(d));
  CHECK_THROWS_AS(orch.invoke_dynamic("PricondSelect"), OrchestratorError);
}

TEST_CASE("dyn_perf_this reruns frozen parameters and tunes armed regions") {
  TuneDir d("dynperf");
  Orchestrator orch(parse_unit(fixture("sample6.f")), options(d));
  // Not armed yet: error.
  CHECK_THROWS_AS(orch.dyn_perf_this("PricondSelect"), OrchestratorError);
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  orch.at_exec(OAT_DYNAMIC, "OAT_DynamicRoutines");
  size_t before = orch.trace().size();
  orch.dyn_perf_this("PricondSelect");  // armed but untuned: tunes here
  CHECK(orch.trace().size() == before + 2);
  size_t tuned = orch.trace().size();
  orch.dyn_perf_this("PricondSelect");  // frozen: rerun without search
  CHECK(orch.trace().size() == tuned);
}

TEST_CASE("directive ops drive assignments, BP registration and OAT_ATexec") {
  TuneDir d("ops");
  // sample3 carries only directives: basics via assignments plus a static
  // OAT_ATexec call (which finds no static regions but must be ordered).
  ProgramUnit u = parse_unit(fixture("sample3.f"));
  Orchestrator orch(std::move(u), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  CHECK_NOTHROW(orch.run_ops(true));
  CHECK(orch.state().basics.at("OAT_STARTTUNESIZE") == ParamValue{1024LL});
  CHECK(orch.state().basics.at("OAT_ENDTUNESIZE") == ParamValue{3072LL});
}

TEST_CASE("user-declared basic parameters define their own context axis") {
  TuneDir d("userbp");
  ProgramUnit u = parse_unit(fixture("sample4c.f"));
  u.regions[0].varied->hi = 2;
  Orchestrator orch(std::move(u), options(d));
  orch.run_ops(false);  // registers the nprocs BP and its renamed info params
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  TuningReport rep = orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  REQUIRE(rep.regions.size() == 1);
  // contexts: 2 default problem sizes x 8 nprocs values, 2x2 grid each
  CHECK(rep.regions[0].evaluations == 2 * 8 * 4);
  ParamTree t = read_param_file(d.read("OAT_StaticParamMyMatMul.dat"));
  ParamValue v = lookup(t, "MyMatMul", "MyMatMul_I",
                        {{"OAT_PROBSIZE", 8}, {"nprocs", 3}});
  CHECK(std::get<long long>(v) >= 1);
}

TEST_CASE("nested variable/unroll regions tune as one composed plan") {
  TuneDir d("nested");
  ProgramUnit u = parse_unit(fixture("sample10.f"));
  // Shrink: BL in 1..2, each kernel unroll in 1..3.
  u.regions[0].varied->hi = 2;
  u.regions[0].children[0].varied->hi = 3;
  u.regions[0].children[1].varied->hi = 3;
  Orchestrator orch(std::move(u), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  // All-exhaustive composed plan: 2 * 3 * 3 per context, 2 contexts.
  CHECK(orch.predict_evaluations(OAT_STATIC) == 2 * 2 * 3 * 3);
  TuningReport rep = orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  REQUIRE(rep.regions.size() == 1);
  CHECK(rep.regions[0].evaluations == 36);
  CHECK(rep.regions[0].chosen.count("ABlockRoutine_BL"));
  CHECK(rep.regions[0].chosen.count("Kernel1_I"));
  CHECK(rep.regions[0].chosen.count("Kernel2_J"));
}

TEST_CASE("trace records match predictions and flush to OATATlog.dat") {
  TuneDir d("trace");
  OrchestratorOptions opt = options(d);
  opt.visualization = true;
  ProgramUnit u = parse_unit(fixture("sample2.f") + fixture("sample5.f"));
  Orchestrator orch(std::move(u), opt);
  long long predicted =
      orch.predict_evaluations(OAT_INSTALL) + orch.predict_evaluations(OAT_STATIC);
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  orch.at_exec(OAT_STATIC, "OAT_StaticRoutines");
  CHECK(static_cast<long long>(orch.trace().size()) == predicted);
  orch.flush_trace();
  REQUIRE(d.has("OATATlog.dat"));
  std::istringstream log(d.read("OATATlog.dat"));
  std::string header;
  std::getline(log, header);
  CHECK(header.front() == '#');
  long long lines = 0;
  for (std::string l; std::getline(log, l);)
    if (!l.empty()) ++lines;
  CHECK(lines == predicted);
}

TEST_CASE("visualization off suppresses the trace file") {
  TuneDir d("noviz");
  Orchestrator orch(parse_unit(fixture("sample2.f")), options(d));
  orch.at_exec(OAT_INSTALL, "OAT_InstallRoutines");
  orch.flush_trace();
  CHECK_FALSE(d.has("OATATlog.dat"));
}
