#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oat/fitting.hpp"
#include "oat/interp.hpp"
#include "oat/param_store.hpp"
#include "oat/region.hpp"
#include "oat/search.hpp"
#include "oat/transform.hpp"

// The tuning driver: executes embedded OAT_* runtime calls, runs the
// three-stage pipeline over registered regions, persists results to the
// parameter-information files, and emits the OATATlog.dat trace.

namespace oat {

class OrchestratorError : public std::runtime_error {
 public:
  OrchestratorError(const std::string& msg, std::string code = "")
      : std::runtime_error(code.empty() ? msg : code + ": " + msg), code(std::move(code)) {}
  std::string code;  // OAT_E_ORDER / OAT_E_NOBP when applicable
};

// OAT_ATkinds constants.
enum : int { OAT_ALL = 0, OAT_INSTALL = 1, OAT_STATIC = 2, OAT_DYNAMIC = 3 };

struct TraceRecord {
  long long seq = 0;
  std::string region;
  std::string stage;       // install | static | dynamic
  std::string assignment;  // "(pp v)(pp v)..."
  double cost = 0.0;
  double timestamp = 0.0;  // seconds since orchestrator start
};

struct RegionReport {
  std::string region;
  std::string stage;
  std::map<std::string, ParamValue> chosen;  // final-context PP values
  long long evaluations = 0;
  std::vector<Collision> collisions;
  std::string note;
};

struct TuningReport {
  std::vector<RegionReport> regions;
  long long total_evaluations = 0;
};

struct OrchestratorOptions {
  std::string dir = ".";  // parameter/trace file directory
  int debug = 0;
  bool visualization = false;
  MeasureMode mode = MeasureMode::Deterministic;
  int repetitions = 5;
  std::uint64_t seed = 12345;
};

class Orchestrator {
 public:
  Orchestrator(ProgramUnit unit, OrchestratorOptions opt);

  // Embedded `!OAT$ call ...` / `!OAT$ name = value` operations, in
  // source order. `include_atexec = false` applies only the setup
  // operations (assignments, BP registration) and skips OAT_ATexec.
  TuningReport run_ops(bool include_atexec = true);

  TuningReport at_exec(int kind, const std::string& routines_name);

  void at_set(int kind, const std::string& name);
  void at_del(const std::string& routines_name, const std::string& name);
  void install_init();

  void bp_set(const std::string& name);
  void bp_set_name(const std::string& kind, const std::string& bp, const std::string& new_name);
  void bp_set_cdf(const std::string& bp, const std::string& cdf_spec);

  void set_param(const std::string& name, const ParamValue& value);

  // Runs an armed run-time region (branch selection + execution).
  RegionReport invoke_dynamic(const std::string& name);
  std::vector<RegionReport> invoke_all_dynamic();

  // Re-runs a previously tuned/armed run-time region with its frozen
  // parameters; no search.
  void dyn_perf_this(const std::string& name);

  // Analytic evaluation count for a stage against the current registry
  // and basic parameters; equals the trace lines the stage will emit.
  long long predict_evaluations(int kind) const;

  void flush_trace() const;  // writes OATATlog.dat when visualization is on

  const std::vector<TraceRecord>& trace() const { return trace_; }
  const StageState& state() const { return state_; }
  const std::vector<std::string>& routines(int kind) const;
  bool is_armed(const std::string& name) const { return armed_.count(name) > 0; }

  struct BpAxis {
    std::vector<std::string> vars;  // kernel scalars the axis binds
    std::string context_key;        // file context key (OAT_PROBSIZE or BP name)
    std::vector<long long> grid;
  };

 private:
  const Region* find_region(const std::string& name) const;
  std::vector<const Region*> nested_chain(const Region& r) const;
  std::vector<BpAxis> bp_axes(const Region& r) const;
  Stage stage_of(AtType t) const;

  KernelProgram materialize(const Region& r, const std::map<std::string, long long>& named,
                            std::map<std::string, double>* binds) const;
  double measure_point(const KernelProgram& prog, const std::map<std::string, double>& binds);
  std::map<std::string, double> context_bindings(
      const std::vector<std::pair<std::string, long long>>& context) const;
  std::optional<ParamValue> find_param(const std::string& name, Stage requesting) const;

  RegionReport tune_region(const Region& r, Stage stage);
  void tune_define(const Region& r, Stage stage, RegionReport* rep);
  void tune_estimated_select(const Region& r, Stage stage, RegionReport* rep);
  void tune_searched(const Region& r, Stage stage, RegionReport* rep);

  void record(const std::string& region, Stage stage, const std::string& assignment,
              double cost);
  void persist(const Region& r, Stage stage, const ParamNode& group);
  ParamTree* stage_tree(Stage stage, const std::string& region);
  std::string param_file_name(Stage stage, const std::string& region, bool def) const;
  ParamTree load_def_tree(Stage stage, const std::string& region) const;
  long long predict_region(const Region& r, Stage stage) const;
  void debug_print(int level, const std::string& text) const;

  ProgramUnit unit_;
  OrchestratorOptions opt_;
  StageState state_;
  std::map<std::string, double> globals_;  // directive assignments, lowered keys

  std::vector<std::string> all_, install_, static_, dynamic_;
  std::set<std::string> install_done_;
  std::set<std::string> armed_;
  std::map<std::string, std::map<std::string, ParamValue>> dynamic_frozen_;

  struct UserBp {
    std::string start_name = "OAT_STARTTUNESIZE";
    std::string end_name = "OAT_ENDTUNESIZE";
    std::string dist_name = "OAT_SAMPDIST";
    std::optional<FitMethod> cdf;
  };
  std::map<std::string, UserBp> user_bps_;  // keyed by BP name (lowered)

  // In-memory stage output trees, keyed by stage then region name.
  std::map<Stage, std::map<std::string, ParamTree>> results_;

  std::vector<TraceRecord> trace_;
  double start_time_ = 0.0;
};

// Parses "least-squares 5" / "user-defined <expr>" / "auto".
FitMethod parse_cdf_spec(const std::string& spec);

}  // namespace oat
