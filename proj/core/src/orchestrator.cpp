#include "oat/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace oat {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string stage_file_word(Stage s) {
  switch (s) {
    case Stage::Install: return "Install";
    case Stage::Static: return "Static";
    case Stage::Dynamic: return "Dynamic";
  }
  return "?";
}

double value_as_double(const ParamValue& v) {
  if (std::holds_alternative<long long>(v)) return static_cast<double>(std::get<long long>(v));
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  throw OrchestratorError("non-numeric parameter value '" + std::get<std::string>(v) + "'");
}

long long value_as_int(const ParamValue& v) {
  if (std::holds_alternative<long long>(v)) return std::get<long long>(v);
  if (std::holds_alternative<double>(v)) return static_cast<long long>(std::get<double>(v));
  throw OrchestratorError("non-integer parameter value '" + std::get<std::string>(v) + "'");
}

std::string format_assignment(const std::map<std::string, long long>& named) {
  if (named.empty()) return "()";
  std::ostringstream os;
  for (const auto& [k, v] : named) os << "(" << k << " " << v << ")";
  return os.str();
}

}  // namespace

FitMethod parse_cdf_spec(const std::string& spec) {
  std::istringstream is(spec);
  std::string word;
  is >> word;
  FitMethod m;
  std::string lo = lower(word);
  if (lo == "least-squares") {
    m.kind = FitMethod::Kind::LeastSquares;
    if (!(is >> m.order)) throw OrchestratorError("least-squares needs an order: '" + spec + "'");
  } else if (lo == "dspline") {
    m.kind = FitMethod::Kind::Dspline;
  } else if (lo == "user-defined") {
    m.kind = FitMethod::Kind::UserDefined;
    std::string rest;
    std::getline(is, rest);
    m.expr = parse_expression(rest, 0);
  } else if (lo == "auto") {
    m.kind = FitMethod::Kind::Auto;
  } else {
    throw OrchestratorError("unknown cost-definition-function kind '" + word + "'");
  }
  return m;
}

Orchestrator::Orchestrator(ProgramUnit unit, OrchestratorOptions opt)
    : unit_(std::move(unit)), opt_(std::move(opt)) {
  start_time_ = now_seconds();
  if (const char* env = std::getenv("OAT_DEBUG")) {
    try {
      opt_.debug = std::stoi(env);
    } catch (...) {
    }
  }
  for (const auto& r : unit_.regions) {
    all_.push_back(r.name);
    switch (r.at_type) {
      case AtType::Install: install_.push_back(r.name); break;
      case AtType::Static: static_.push_back(r.name); break;
      case AtType::Dynamic: dynamic_.push_back(r.name); break;
      case AtType::Formula: break;
    }
  }

  // Pick up prior stage results from disk.
  if (fs::is_directory(opt_.dir)) {
    for (const auto& entry : fs::directory_iterator(opt_.dir)) {
      std::string f = entry.path().filename().string();
      if (f.find("ParamDef") != std::string::npos) continue;
      for (Stage s : {Stage::Install, Stage::Static, Stage::Dynamic}) {
        std::string prefix = "OAT_" + stage_file_word(s) + "Param";
        if (f.rfind(prefix, 0) != 0 || f.size() <= prefix.size() + 4 ||
            f.substr(f.size() - 4) != ".dat")
          continue;
        std::string region = f.substr(prefix.size(), f.size() - prefix.size() - 4);
        std::ifstream in(entry.path());
        std::stringstream buf;
        buf << in.rdbuf();
        try {
          results_[s][region] = read_param_file(buf.str());
        } catch (const ParamError&) {
        }
      }
    }
  }
  for (const auto& name : install_)
    if (results_[Stage::Install].count(name)) install_done_.insert(name);

  // Stages already materialized on disk count as completed. An empty
  // region list never completes implicitly: the stage must be requested.
  auto all_done = [&](Stage s, const std::vector<std::string>& names) {
    if (names.empty()) return false;
    for (const auto& n : names)
      if (!results_[s].count(n)) return false;
    return true;
  };
  if (all_done(Stage::Install, install_)) state_.completed.insert(Stage::Install);
  if (state_.completed.count(Stage::Install) && all_done(Stage::Static, static_))
    state_.completed.insert(Stage::Static);

  // Basic parameters from the def files are visible immediately (so
  // evaluation prediction works before the first tuning request).
  for (Stage s : {Stage::Install, Stage::Static, Stage::Dynamic}) {
    for (const auto& root : load_def_tree(s, "").roots) {
      if (root.name != "BasicParam") continue;
      for (const auto& c : root.children)
        if (c.is_leaf() && !state_.has_basic(upper(c.name))) set_param(c.name, *c.value);
    }
  }
}

const std::vector<std::string>& Orchestrator::routines(int kind) const {
  switch (kind) {
    case OAT_INSTALL: return install_;
    case OAT_STATIC: return static_;
    case OAT_DYNAMIC: return dynamic_;
    default: return all_;
  }
}

const Region* Orchestrator::find_region(const std::string& name) const {
  for (const auto& r : unit_.regions)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<const Region*> Orchestrator::nested_chain(const Region& r) const {
  std::vector<const Region*> chain;
  std::function<void(const Region&)> walk = [&](const Region& reg) {
    chain.push_back(&reg);
    for (const auto& c : reg.children) walk(c);
  };
  walk(r);
  return chain;
}

Stage Orchestrator::stage_of(AtType t) const {
  switch (t) {
    case AtType::Install: return Stage::Install;
    case AtType::Static: return Stage::Static;
    case AtType::Dynamic: return Stage::Dynamic;
    case AtType::Formula: break;
  }
  throw OrchestratorError("formula regions have no tuning stage");
}

void Orchestrator::set_param(const std::string& name, const ParamValue& value) {
  std::string key = upper(name);
  state_.basics[key] = value;
  if (!std::holds_alternative<std::string>(value))
    globals_[lower(name)] = value_as_double(value);
}

// --- registry ops --------------------------------------------------------------

void Orchestrator::at_set(int kind, const std::string& name) {
  if (!find_region(name)) throw OrchestratorError("unknown tuning region '" + name + "'");
  auto add = [&](std::vector<std::string>& list) {
    if (std::find(list.begin(), list.end(), name) == list.end()) list.push_back(name);
  };
  add(all_);
  switch (kind) {
    case OAT_INSTALL: add(install_); break;
    case OAT_STATIC: add(static_); break;
    case OAT_DYNAMIC: add(dynamic_); break;
    default: break;
  }
}

void Orchestrator::at_del(const std::string& routines_name, const std::string& name) {
  auto pick = [&]() -> std::vector<std::string>* {
    std::string lo = lower(routines_name);
    if (lo == "oat_installroutines") return &install_;
    if (lo == "oat_staticroutines") return &static_;
    if (lo == "oat_dynamicroutines") return &dynamic_;
    if (lo == "oat_allroutines") return &all_;
    throw OrchestratorError("unknown routine list '" + routines_name + "'");
  };
  std::vector<std::string>* list = pick();
  auto it = std::find(list->begin(), list->end(), name);
  if (it == list->end()) {
    debug_print(1, "at_del: '" + name + "' not in " + routines_name + " (no-op)");
    return;
  }
  list->erase(it);
}

void Orchestrator::install_init() { install_done_.clear(); }

// --- basic parameters --------------------------------------------------------------

void Orchestrator::bp_set(const std::string& name) { user_bps_[upper(name)] = UserBp{}; }

void Orchestrator::bp_set_name(const std::string& kind, const std::string& bp,
                               const std::string& new_name) {
  auto it = user_bps_.find(upper(bp));
  if (it == user_bps_.end())
    throw OrchestratorError("OAT_BPsetName before OAT_BPset for '" + bp + "'");
  std::string k = upper(kind);
  if (k == "STARTTUNESIZE")
    it->second.start_name = upper(new_name);
  else if (k == "ENDTUNESIZE")
    it->second.end_name = upper(new_name);
  else if (k == "SAMPDIST")
    it->second.dist_name = upper(new_name);
  else
    throw OrchestratorError("unknown BP info kind '" + kind + "'");
}

void Orchestrator::bp_set_cdf(const std::string& bp, const std::string& cdf_spec) {
  auto it = user_bps_.find(upper(bp));
  if (it == user_bps_.end())
    throw OrchestratorError("OAT_BPsetCDF before OAT_BPset for '" + bp + "'");
  it->second.cdf = parse_cdf_spec(cdf_spec);
}

std::vector<Orchestrator::BpAxis> Orchestrator::bp_axes(const Region& r) const {
  auto basic_int = [&](const std::string& name) -> long long {
    auto it = state_.basics.find(upper(name));
    if (it == state_.basics.end())
      throw OrchestratorError("basic parameter '" + name + "' is not set", OAT_E_NOBP);
    return value_as_int(it->second);
  };
  auto default_range = [&](BpAxis* axis) {
    axis->context_key = "OAT_PROBSIZE";
    long long start = basic_int("OAT_STARTTUNESIZE");
    long long end = basic_int("OAT_ENDTUNESIZE");
    long long dist = basic_int("OAT_SAMPDIST");
    if (dist < 1) throw OrchestratorError("sample distance must be >= 1");
    for (long long v = start; v <= end; v += dist) axis->grid.push_back(v);
  };

  std::vector<BpAxis> axes;
  // Structural features size every free loop bound by the problem size.
  if ((r.feature == Feature::LoopFusionSplit || r.feature == Feature::LoopFusion) &&
      r.params.empty()) {
    std::vector<std::string> vars = loop_bound_variables(r);
    if (vars.empty()) return axes;
    BpAxis axis;
    for (const auto& v : vars) axis.vars.push_back(lower(v));
    default_range(&axis);
    axes.push_back(std::move(axis));
    return axes;
  }
  for (const auto& p : resolve_parameters(r)) {
    // An `in OAT_PROBSIZE` declaration ranges over the default grid too.
    if (p.attr == ParamDecl::Attr::In && upper(p.name) == "OAT_PROBSIZE") {
      BpAxis axis;
      default_range(&axis);
      axes.push_back(std::move(axis));
      continue;
    }
    if (p.attr != ParamDecl::Attr::Bp) continue;
    BpAxis axis;
    axis.vars.push_back(lower(p.name));
    auto it = user_bps_.find(upper(p.name));
    long long start, end, dist;
    if (it != user_bps_.end()) {
      axis.context_key = lower(p.name);
      start = basic_int(it->second.start_name);
      end = basic_int(it->second.end_name);
      dist = basic_int(it->second.dist_name);
    } else {
      axis.context_key = "OAT_PROBSIZE";
      start = basic_int("OAT_STARTTUNESIZE");
      end = basic_int("OAT_ENDTUNESIZE");
      dist = basic_int("OAT_SAMPDIST");
    }
    if (dist < 1) throw OrchestratorError("sample distance must be >= 1");
    if (start > end)
      throw OrchestratorError("basic-parameter range is empty (" + std::to_string(start) +
                              " > " + std::to_string(end) + ")");
    for (long long v = start; v <= end; v += dist) axis.grid.push_back(v);
    axes.push_back(std::move(axis));
  }

  // A wrapper region may carry no loops of its own: the free loop bounds
  // of its nested regions share one problem-size axis.
  if (axes.empty() && !r.children.empty()) {
    std::set<std::string> seen;
    BpAxis axis;
    for (const Region* reg : nested_chain(r))
      for (const auto& v : loop_bound_variables(*reg))
        if (seen.insert(lower(v)).second) axis.vars.push_back(lower(v));
    if (!axis.vars.empty()) {
      default_range(&axis);
      axes.push_back(std::move(axis));
    }
  }
  return axes;
}

// --- parameter files --------------------------------------------------------------

std::string Orchestrator::param_file_name(Stage stage, const std::string& region,
                                          bool def) const {
  return opt_.dir + "/OAT_" + stage_file_word(stage) + "Param" + (def ? "Def" : "") + region +
         ".dat";
}

ParamTree Orchestrator::load_def_tree(Stage stage, const std::string& region) const {
  ParamTree merged;
  for (const std::string& path :
       {param_file_name(stage, region, true), param_file_name(stage, "", true),
        opt_.dir + "/OAT_" + stage_file_word(stage) + "Param_Def.dat"}) {
    std::ifstream in(path);
    if (!in) continue;
    std::stringstream buf;
    buf << in.rdbuf();
    ParamTree t = read_param_file(buf.str());
    for (auto& n : t.roots) merged.roots.push_back(std::move(n));
  }
  return merged;
}

ParamTree* Orchestrator::stage_tree(Stage stage, const std::string& region) {
  ParamTree& t = results_[stage][region];
  if (t.roots.empty()) {
    ParamNode root;
    root.name = region;
    t.roots.push_back(std::move(root));
  }
  return &t;
}

void Orchestrator::persist(const Region& r, Stage stage, const ParamNode& group) {
  (void)group;
  ParamTree* t = stage_tree(stage, r.name);
  std::ofstream out(param_file_name(stage, r.name, false));
  out << write_param_file(*t);
}

void Orchestrator::record(const std::string& region, Stage stage,
                          const std::string& assignment, double cost) {
  TraceRecord rec;
  rec.seq = static_cast<long long>(trace_.size()) + 1;
  rec.region = region;
  rec.stage = to_string(stage);
  rec.assignment = assignment;
  rec.cost = cost;
  rec.timestamp = now_seconds() - start_time_;
  if (opt_.debug >= 1)
    debug_print(1, region + " " + rec.stage + " " + assignment + " cost=" +
                       std::to_string(cost));
  trace_.push_back(std::move(rec));
}

void Orchestrator::flush_trace() const {
  if (!opt_.visualization) return;
  std::ofstream out(opt_.dir + "/OATATlog.dat");
  out << "#seq\tregion\tstage\tassignment\tcost\ttimestamp\n";
  for (const auto& r : trace_) {
    out << r.seq << "\t" << r.region << "\t" << r.stage << "\t" << r.assignment << "\t"
        << r.cost << "\t" << r.timestamp << "\n";
  }
}

void Orchestrator::debug_print(int level, const std::string& text) const {
  if (opt_.debug >= level) std::cerr << "OAT-DEBUG: " << text << "\n";
}

// --- evaluation --------------------------------------------------------------------

std::map<std::string, double> Orchestrator::context_bindings(
    const std::vector<std::pair<std::string, long long>>& context) const {
  std::map<std::string, double> b = globals_;
  for (const auto& [name, v] : state_.basics)
    if (!std::holds_alternative<std::string>(v)) b[lower(name)] = value_as_double(v);
  // Cost expressions conventionally write OAT_NUMPROC without the S.
  if (auto it = b.find("oat_numprocs"); it != b.end()) b["oat_numproc"] = it->second;
  for (const auto& [key, value] : context) b[lower(key)] = static_cast<double>(value);
  return b;
}

std::optional<ParamValue> Orchestrator::find_param(const std::string& name,
                                                   Stage requesting) const {
  for (Stage origin : {Stage::Install, Stage::Static, Stage::Dynamic}) {
    auto sit = results_.find(origin);
    if (sit == results_.end()) continue;
    for (const auto& [region, tree] : sit->second) {
      for (const auto& root : tree.roots) {
        for (const auto& c : root.children) {
          if (!c.is_leaf() || lower(c.name) != lower(name)) continue;
          if (!check_stage_access(requesting, origin))
            throw OrchestratorError("parameter '" + name + "' originates at " +
                                    to_string(origin) + " time and is not visible at " +
                                    to_string(requesting) + " time");
          return *c.value;
        }
      }
    }
  }
  return std::nullopt;
}

KernelProgram Orchestrator::materialize(const Region& r,
                                        const std::map<std::string, long long>& named,
                                        std::map<std::string, double>* binds) const {
  auto value_of = [&](const std::string& pp, long long fallback) {
    auto it = named.find(pp);
    return it == named.end() ? fallback : it->second;
  };

  // Nested regions first: holes become the children's materialized code.
  std::function<std::vector<StmtPtr>(const std::vector<StmtPtr>&)> fill =
      [&](const std::vector<StmtPtr>& stmts) {
        std::vector<StmtPtr> out;
        for (const auto& s : stmts) {
          if (s->kind == Stmt::Kind::Hole) {
            const Region& child = r.children.at(static_cast<size_t>(s->hole_index));
            KernelProgram sub = materialize(child, named, binds);
            for (auto& st : sub.stmts) out.push_back(std::move(st));
            continue;
          }
          if (s->kind == Stmt::Kind::Do) {
            auto c = std::make_shared<Stmt>(*s);
            c->body = fill(s->body);
            out.push_back(std::move(c));
            continue;
          }
          out.push_back(clone_stmt(s));
        }
        return out;
      };

  KernelProgram body;
  body.decls = r.body.decls;
  body.stmts = fill(r.body.stmts);

  switch (r.feature) {
    case Feature::Define:
      break;
    case Feature::Variable: {
      VariedSpec v = r.varied.value_or(VariedSpec{});
      if (v.params.empty()) v.params = r.target_params;
      for (const auto& p : v.params) {
        long long val = value_of(performance_param_name(r.name, p), v.lo);
        (*binds)[lower(p)] = static_cast<double>(val);
      }
      break;
    }
    case Feature::Unroll: {
      VariedSpec v = r.varied.value_or(VariedSpec{});
      if (v.params.empty()) v.params = r.target_params;
      std::map<std::string, long long> factors;
      for (const auto& p : v.params)
        factors[lower(p)] = value_of(performance_param_name(r.name, p), std::max(1LL, v.lo));
      body = unroll(strip_markers(body), factors);
      break;
    }
    case Feature::Select: {
      long long idx = value_of(performance_param_name(r.name, "select"), 1);
      if (idx < 1 || static_cast<size_t>(idx) > r.select_branches.size())
        throw OrchestratorError("select index " + std::to_string(idx) + " out of range for '" +
                                r.name + "'");
      body = clone_program(r.select_branches[static_cast<size_t>(idx) - 1].body);
      break;
    }
    case Feature::LoopFusionSplit:
    case Feature::LoopFusion: {
      VariantSet vs = enumerate_candidates(r);
      long long idx = value_of(performance_param_name(r.name, "variant"), 1);
      if (idx < 1 || static_cast<size_t>(idx) > vs.variants.size())
        throw OrchestratorError("variant index " + std::to_string(idx) +
                                " out of range for '" + r.name + "'");
      body = clone_program(vs.variants[static_cast<size_t>(idx) - 1].program);
      break;
    }
  }
  return strip_markers(body);
}

double Orchestrator::measure_point(const KernelProgram& prog,
                                   const std::map<std::string, double>& binds) {
  ExecEnv env;
  env.auto_allocate = true;
  env.rng_seed = opt_.seed;
  env.scalars = binds;
  allocate_declared(prog, env);
  seed_arrays(env, opt_.seed);
  if (opt_.mode == MeasureMode::Wall)
    return measure(prog, env, opt_.repetitions, MeasureMode::Wall);
  ExecStats stats = interpret(prog, env);
  return static_cast<double>(stats.assigns + stats.loop_iters);
}

// --- tuning --------------------------------------------------------------------------

namespace {

// Cartesian contexts over the BP axes: each context is the ordered
// (key, value) path used for the nested file groups.
std::vector<std::vector<std::pair<std::string, long long>>> cartesian_contexts(
    const std::vector<Orchestrator::BpAxis>& axes);

}  // namespace

RegionReport Orchestrator::tune_region(const Region& r, Stage stage) {
  RegionReport rep;
  rep.region = r.name;
  rep.stage = to_string(stage);
  for (const auto& p : r.params) {
    if (p.attr == ParamDecl::Attr::Out && is_reserved(p.name))
      throw OrchestratorError("'" + p.name + "' is a reserved system parameter");
  }
  if (r.feature == Feature::Define) {
    tune_define(r, stage, &rep);
  } else if (r.feature == Feature::Select) {
    tune_estimated_select(r, stage, &rep);
  } else {
    tune_searched(r, stage, &rep);
  }
  if (opt_.debug >= 1 && !r.debug_items.empty()) {
    std::string line = r.name + " debug:";
    for (const auto& item : r.debug_items) {
      auto it = rep.chosen.find(item);
      std::string v = "?";
      if (it != rep.chosen.end()) v = value_to_string(it->second);
      line += " " + item + "=" + v;
    }
    debug_print(1, line);
  }
  return rep;
}

namespace {

ParamNode* descend(ParamNode* root,
                   const std::vector<std::pair<std::string, long long>>& context) {
  ParamNode* cur = root;
  for (const auto& [key, value] : context) {
    ParamNode* next = nullptr;
    for (auto& c : cur->children) {
      if (c.name == key && c.value && std::holds_alternative<long long>(*c.value) &&
          std::get<long long>(*c.value) == value) {
        next = &c;
        break;
      }
    }
    if (!next) {
      ParamNode n;
      n.name = key;
      n.value = value;
      cur->children.push_back(std::move(n));
      next = &cur->children.back();
    }
    cur = next;
  }
  return cur;
}

void set_leaf(ParamNode* group, const std::string& key, const ParamValue& value) {
  for (auto& c : group->children) {
    if (c.name == key) {
      c.value = value;
      c.children.clear();
      return;
    }
  }
  ParamNode n;
  n.name = key;
  n.value = value;
  group->children.push_back(std::move(n));
}

std::vector<std::vector<std::pair<std::string, long long>>> cartesian_contexts(
    const std::vector<Orchestrator::BpAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, long long>>> out;
  out.emplace_back();
  for (const auto& axis : axes) {
    std::vector<std::vector<std::pair<std::string, long long>>> next;
    for (const auto& prefix : out) {
      for (long long v : axis.grid) {
        auto ctx = prefix;
        ctx.emplace_back(axis.context_key, v);
        next.push_back(std::move(ctx));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

void Orchestrator::tune_define(const Region& r, Stage stage, RegionReport* rep) {
  std::map<std::string, double> binds = context_bindings({});
  std::map<std::string, long long> empty;
  KernelProgram prog = materialize(r, empty, &binds);
  ExecEnv env;
  env.auto_allocate = true;
  env.rng_seed = opt_.seed;
  env.scalars = binds;
  allocate_declared(prog, env);
  seed_arrays(env, opt_.seed);
  interpret(prog, env);

  ParamTree* tree = stage_tree(stage, r.name);
  ParamNode* root = &tree->roots.front();
  for (const auto& p : r.params) {
    if (p.attr != ParamDecl::Attr::Out) continue;
    auto it = env.scalars.find(lower(p.name));
    if (it == env.scalars.end())
      throw OrchestratorError("define region '" + r.name + "' never assigned out parameter '" +
                              p.name + "'");
    double v = it->second;
    ParamValue pv;
    if (v == static_cast<double>(static_cast<long long>(v)))
      pv = static_cast<long long>(v);
    else
      pv = v;
    set_leaf(root, p.name, pv);
    rep->chosen[p.name] = pv;
  }
  record(r.name, stage, "()", 0.0);
  rep->evaluations = 1;
  persist(r, stage, *root);
}

void Orchestrator::tune_estimated_select(const Region& r, Stage stage, RegionReport* rep) {
  std::vector<BpAxis> axes = stage == Stage::Dynamic ? std::vector<BpAxis>{} : bp_axes(r);
  auto contexts = cartesian_contexts(axes);
  ParamTree* tree = stage_tree(stage, r.name);
  std::string pp = performance_param_name(r.name, "select");

  bool estimated = true;
  for (const auto& b : r.select_branches)
    if (!b.according || !b.according->estimated) estimated = false;
  if (!estimated && !(r.according && r.according->estimated) &&
      !(r.according && !r.according->clauses.empty())) {
    // No selection criterion at all: single-branch regions pass trivially.
    if (r.select_branches.size() != 1)
      throw OrchestratorError("select region '" + r.name + "' has no according clause");
  }

  for (const auto& context : contexts) {
    std::map<std::string, double> binds = context_bindings(context);
    for (const auto& p : r.params) {
      if (p.attr != ParamDecl::Attr::In) continue;
      if (binds.count(lower(p.name))) continue;
      auto v = find_param(p.name, stage);
      if (v) binds[lower(p.name)] = value_as_double(*v);
    }

    long long winner = 1;
    if (r.select_branches.size() == 1) {
      record(r.name, stage, "(" + pp + " 1)", 0.0);
      rep->evaluations += 1;
    } else if (estimated || (r.according && r.according->estimated)) {
      double best = 0.0;
      bool have = false;
      for (size_t i = 0; i < r.select_branches.size(); ++i) {
        const auto& spec =
            r.select_branches[i].according ? *r.select_branches[i].according : *r.according;
        double c;
        try {
          c = eval_cost_expression(spec.cost, binds);
        } catch (const std::exception& e) {
          throw OrchestratorError("region '" + r.name + "' branch " + std::to_string(i + 1) +
                                  ": " + e.what());
        }
        record(r.name, stage, "(" + pp + " " + std::to_string(i + 1) + ")", c);
        rep->evaluations += 1;
        if (!have || c < best) {
          have = true;
          best = c;
          winner = static_cast<long long>(i) + 1;
        }
      }
    } else {
      // min/condition selection: execute every branch, collect records.
      std::vector<CandidateRecord> records;
      for (size_t i = 0; i < r.select_branches.size(); ++i) {
        ExecEnv env;
        env.auto_allocate = true;
        env.rng_seed = opt_.seed;
        env.scalars = binds;
        interpret(r.prepro, env);
        ExecStats stats = interpret(strip_markers(r.select_branches[i].body), env);
        interpret(r.postpro, env);
        CandidateRecord rec;
        rec.index = static_cast<int>(i) + 1;
        for (const auto& p : r.params) {
          auto it = env.scalars.find(lower(p.name));
          if (it != env.scalars.end()) rec.values[lower(p.name)] = it->second;
        }
        record(r.name, stage, "(" + pp + " " + std::to_string(i + 1) + ")",
               static_cast<double>(stats.assigns + stats.loop_iters));
        rep->evaluations += 1;
        records.push_back(std::move(rec));
      }
      try {
        winner = evaluate_according(*r.according, records).index;
      } catch (const FitError& e) {
        throw OrchestratorError("region '" + r.name + "': " + e.what());
      }
    }

    ParamNode* group = descend(&tree->roots.front(), context);
    set_leaf(group, pp, winner);
    rep->chosen[pp] = winner;
  }
  persist(r, stage, tree->roots.front());
}

void Orchestrator::tune_searched(const Region& r, Stage stage, RegionReport* rep) {
  std::vector<const Region*> chain = nested_chain(r);

  std::vector<SearchSpace> plan;
  std::vector<std::pair<std::string, std::string>> pending;  // (region, pp)
  for (const Region* reg : chain) {
    SearchSpace s = build_space(*reg);
    for (auto& d : s.dims) {
      d.name = performance_param_name(reg->name, d.name);
      pending.emplace_back(reg->name, d.name);
    }
    plan.push_back(std::move(s));
  }

  // User-specified values force their parameters out of the search.
  ParamTree def = load_def_tree(stage, r.name);
  std::map<std::string, long long> forced;
  for (const auto& col : detect_collision(def, pending)) {
    forced[col.param] = value_as_int(col.forced_value);
    rep->collisions.push_back(col);
    debug_print(1, "collision: " + col.region + "." + col.param + " forced to " +
                       value_to_string(col.forced_value));
  }
  for (auto& s : plan) {
    s.dims.erase(std::remove_if(s.dims.begin(), s.dims.end(),
                                [&](const Dim& d) { return forced.count(d.name) > 0; }),
                 s.dims.end());
  }
  std::vector<std::string> dim_names;
  for (const auto& s : plan)
    for (const auto& d : s.dims) dim_names.push_back(d.name);

  std::vector<BpAxis> axes = stage == Stage::Dynamic ? std::vector<BpAxis>{} : bp_axes(r);
  auto contexts = cartesian_contexts(axes);
  ParamTree* tree = stage_tree(stage, r.name);

  bool fit_mode = r.fitting.has_value() && chain.size() == 1 &&
                  (r.feature == Feature::Unroll || r.feature == Feature::Variable);

  for (const auto& context : contexts) {
    std::map<std::string, double> base_binds = context_bindings(context);
    // Bind each BP's kernel variable: the default axis key in the file is
    // OAT_PROBSIZE, but the loop bound uses the declared/inferred var.
    for (size_t a = 0; a < axes.size(); ++a)
      for (const auto& var : axes[a].vars)
        base_binds[var] = static_cast<double>(context[a].second);

    auto eval_named = [&](const std::map<std::string, long long>& named) {
      std::map<std::string, long long> full = named;
      for (const auto& [k, v] : forced) full[k] = v;
      std::map<std::string, double> binds = base_binds;
      KernelProgram prog = materialize(r, full, &binds);
      double c = measure_point(prog, binds);
      record(r.name, stage, format_assignment(full), c);
      rep->evaluations += 1;
      return c;
    };

    std::map<std::string, long long> chosen = forced;
    if (fit_mode && !plan[0].dims.empty()) {
      // Per-dimension sampling, last dim first; fitted optimum frozen
      // before moving to the next dim.
      std::map<std::string, long long> frozen;
      for (const auto& d : plan[0].dims) frozen[d.name] = d.domain.front();
      for (size_t di = plan[0].dims.size(); di-- > 0;) {
        const Dim& d = plan[0].dims[di];
        long long lo = d.domain.front(), hi = d.domain.back();
        SampleSpec samples = resolve_samples(*r.fitting, lo, hi);
        std::vector<std::pair<long long, double>> measured;
        for (long long x : samples.points) {
          auto named = frozen;
          named[d.name] = x;
          measured.emplace_back(x, eval_named(named));
        }
        int order = resolve_order(r.fitting->method, measured.size());
        FitModel model = fit_least_squares(measured, order);
        frozen[d.name] = predict_optimum(model, lo, hi);
      }
      for (const auto& [k, v] : frozen) chosen[k] = v;
    } else if (!dim_names.empty()) {
      CostFn cost = [&](const Assignment& a) {
        std::map<std::string, long long> named;
        for (size_t i = 0; i < dim_names.size(); ++i) named[dim_names[i]] = a[i];
        return eval_named(named);
      };
      std::vector<SearchSpace> live;
      for (const auto& s : plan)
        if (!s.dims.empty()) live.push_back(s);
      SearchResult res = live.size() == 1 ? run_search(live[0], cost)
                                          : composed_search(live, cost);
      size_t i = 0;
      for (const auto& s : live)
        for (const auto& d : s.dims) chosen[d.name] = res.best[i++];
    }

    ParamNode* group = descend(&tree->roots.front(), context);
    for (const auto& [k, v] : chosen) {
      set_leaf(group, k, v);
      rep->chosen[k] = v;
    }
  }

  // Static result files carry the relevant basics at the top level.
  if (stage == Stage::Static) {
    for (const char* b : {"OAT_NUMPROCS", "OAT_SAMPDIST"}) {
      auto it = state_.basics.find(b);
      if (it != state_.basics.end()) {
        ParamNode* root = &tree->roots.front();
        // keep basics ahead of the context groups
        ParamNode leaf;
        leaf.name = b;
        leaf.value = it->second;
        bool present = false;
        for (auto& c : root->children)
          if (c.name == b) {
            c.value = it->second;
            present = true;
          }
        if (!present) {
          size_t insert_at = 0;
          while (insert_at < root->children.size() && root->children[insert_at].is_leaf())
            ++insert_at;
          root->children.insert(root->children.begin() + static_cast<long>(insert_at),
                                std::move(leaf));
        }
      }
    }
  }
  persist(r, stage, tree->roots.front());
}

// --- stage driver ------------------------------------------------------------------

TuningReport Orchestrator::at_exec(int kind, const std::string& routines_name) {
  TuningReport report;
  if (kind == OAT_ALL) {
    for (int k : {OAT_INSTALL, OAT_STATIC, OAT_DYNAMIC}) {
      TuningReport part = at_exec(k, routines_name);
      for (auto& rr : part.regions) report.regions.push_back(std::move(rr));
      report.total_evaluations += part.total_evaluations;
    }
    return report;
  }

  Stage stage = kind == OAT_INSTALL ? Stage::Install
                : kind == OAT_STATIC ? Stage::Static
                                     : Stage::Dynamic;

  // BasicParam groups in the stage's def files feed the stage state.
  // Values already set (directive assignments, OAT_BPsetVal) win.
  ParamTree def = load_def_tree(stage, "");
  for (const auto& root : def.roots) {
    if (root.name != "BasicParam") continue;
    for (const auto& c : root.children)
      if (c.is_leaf() && !state_.has_basic(upper(c.name))) set_param(c.name, *c.value);
  }

  OrderCheck check = enforce_order(state_, stage);
  if (check != OrderCheck::Ok)
    throw OrchestratorError(to_string(stage) + "-time tuning request rejected",
                            order_error_code(check));

  std::string lo = lower(routines_name);
  const std::vector<std::string>* list = nullptr;
  if (lo == "oat_allroutines")
    list = &routines(kind);  // stage list filtered below by kind anyway
  else if (lo == "oat_installroutines")
    list = &install_;
  else if (lo == "oat_staticroutines")
    list = &static_;
  else if (lo == "oat_dynamicroutines")
    list = &dynamic_;
  else
    throw OrchestratorError("unknown routine list '" + routines_name + "'");

  for (const auto& name : *list) {
    // A name may repeat across stages; pick the region tuned at this one.
    const Region* r = nullptr;
    for (const auto& reg : unit_.regions)
      if (reg.name == name && stage_of(reg.at_type) == stage) {
        r = &reg;
        break;
      }
    if (!r) {
      if (!find_region(name)) throw OrchestratorError("unknown tuning region '" + name + "'");
      continue;
    }

    if (stage == Stage::Dynamic) {
      armed_.insert(name);
      debug_print(1, "armed run-time region '" + name + "'");
      continue;
    }
    if (stage == Stage::Install && install_done_.count(name)) {
      debug_print(1, "install region '" + name + "' already tuned; skipping");
      continue;
    }
    RegionReport rr = tune_region(*r, stage);
    if (stage == Stage::Install) install_done_.insert(name);
    report.total_evaluations += rr.evaluations;
    report.regions.push_back(std::move(rr));
  }
  state_.completed.insert(stage);
  return report;
}

RegionReport Orchestrator::invoke_dynamic(const std::string& name) {
  const Region* r = find_region(name);
  if (!r) throw OrchestratorError("unknown tuning region '" + name + "'");
  if (!armed_.count(name))
    throw OrchestratorError("run-time region '" + name + "' was not armed by OAT_ATexec");
  RegionReport rep = tune_region(*r, Stage::Dynamic);
  dynamic_frozen_[name] = rep.chosen;

  // Execute the chosen configuration.
  std::map<std::string, long long> named;
  for (const auto& [k, v] : rep.chosen) named[k] = value_as_int(v);
  std::map<std::string, double> binds = context_bindings({});
  KernelProgram prog = materialize(*r, named, &binds);
  measure_point(prog, binds);
  return rep;
}

std::vector<RegionReport> Orchestrator::invoke_all_dynamic() {
  std::vector<RegionReport> out;
  for (const auto& name : dynamic_)
    if (armed_.count(name)) out.push_back(invoke_dynamic(name));
  return out;
}

void Orchestrator::dyn_perf_this(const std::string& name) {
  auto it = dynamic_frozen_.find(name);
  if (it != dynamic_frozen_.end()) {
    const Region* r = find_region(name);
    std::map<std::string, long long> named;
    for (const auto& [k, v] : it->second) named[k] = value_as_int(v);
    std::map<std::string, double> binds = context_bindings({});
    KernelProgram prog = materialize(*r, named, &binds);
    measure_point(prog, binds);
    return;
  }
  if (armed_.count(name)) {
    // Tuning relocates to this call site.
    invoke_dynamic(name);
    return;
  }
  throw OrchestratorError("region '" + name + "' was never tuned or armed");
}

// --- prediction --------------------------------------------------------------------

long long Orchestrator::predict_region(const Region& r, Stage stage) const {
  long long contexts = 1;
  if (stage != Stage::Dynamic)
    for (const auto& axis : bp_axes(r)) contexts *= static_cast<long long>(axis.grid.size());

  if (r.feature == Feature::Define) return contexts;
  if (r.feature == Feature::Select)
    return contexts * static_cast<long long>(r.select_branches.size());

  std::vector<SearchSpace> plan;
  for (const Region* reg : nested_chain(r)) {
    SearchSpace s = build_space(*reg);
    for (auto& d : s.dims) d.name = performance_param_name(reg->name, d.name);
    plan.push_back(std::move(s));
  }
  ParamTree def = load_def_tree(stage, r.name);
  std::vector<std::pair<std::string, std::string>> pending;
  for (size_t i = 0; i < plan.size(); ++i)
    for (const auto& d : plan[i].dims) pending.emplace_back(plan[i].region_name, d.name);
  std::set<std::string> forced;
  for (const auto& col : detect_collision(def, pending)) forced.insert(col.param);
  for (auto& s : plan)
    s.dims.erase(std::remove_if(s.dims.begin(), s.dims.end(),
                                [&](const Dim& d) { return forced.count(d.name) > 0; }),
                 s.dims.end());

  if (r.fitting && plan.size() == 1 &&
      (r.feature == Feature::Unroll || r.feature == Feature::Variable)) {
    long long per_context = 0;
    for (const auto& d : plan[0].dims) {
      SampleSpec s = resolve_samples(*r.fitting, d.domain.front(), d.domain.back());
      per_context += static_cast<long long>(s.points.size());
    }
    return contexts * per_context;
  }
  std::vector<SearchSpace> live;
  for (const auto& s : plan)
    if (!s.dims.empty()) live.push_back(s);
  if (live.empty()) return 0;
  long long per_context =
      live.size() == 1 ? count_evaluations(live[0]) : count_evaluations(live);
  return contexts * per_context;
}

long long Orchestrator::predict_evaluations(int kind) const {
  if (kind == OAT_ALL)
    return predict_evaluations(OAT_INSTALL) + predict_evaluations(OAT_STATIC) +
           predict_evaluations(OAT_DYNAMIC);
  Stage stage = kind == OAT_INSTALL ? Stage::Install
                : kind == OAT_STATIC ? Stage::Static
                                     : Stage::Dynamic;
  long long total = 0;
  for (const auto& name : routines(kind)) {
    const Region* r = nullptr;
    for (const auto& reg : unit_.regions)
      if (reg.name == name && stage_of(reg.at_type) == stage) {
        r = &reg;
        break;
      }
    if (!r) continue;
    if (stage == Stage::Install && install_done_.count(name)) continue;
    total += predict_region(*r, stage);
  }
  return total;
}

// --- embedded operations --------------------------------------------------------------

TuningReport Orchestrator::run_ops(bool include_atexec) {
  TuningReport report;
  for (const auto& op : unit_.ops) {
    if (std::holds_alternative<DirAssign>(op.op)) {
      const auto& a = std::get<DirAssign>(op.op);
      set_param(a.name, parse_value(a.value));
      continue;
    }
    const auto& call = std::get<DirCall>(op.op);
    const auto& args = call.args;
    auto need = [&](size_t n) {
      if (args.size() < n)
        throw OrchestratorError(call.proc + " expects " + std::to_string(n) +
                                " arguments (line " + std::to_string(op.line) + ")");
    };
    std::string proc = lower(call.proc);
    if (proc == "oat_atexec") {
      need(2);
      std::string k = upper(args[0]);
      int kind = k == "OAT_ALL"       ? OAT_ALL
                 : k == "OAT_INSTALL" ? OAT_INSTALL
                 : k == "OAT_STATIC"  ? OAT_STATIC
                 : k == "OAT_DYNAMIC" ? OAT_DYNAMIC
                                      : -1;
      if (kind < 0) throw OrchestratorError("unknown OAT_ATkinds value '" + args[0] + "'");
      if (!include_atexec) continue;
      TuningReport part = at_exec(kind, args[1]);
      for (auto& rr : part.regions) report.regions.push_back(std::move(rr));
      report.total_evaluations += part.total_evaluations;
    } else if (proc == "oat_atset") {
      need(2);
      std::string k = upper(args[0]);
      int kind = k == "OAT_INSTALL" ? OAT_INSTALL
                 : k == "OAT_STATIC" ? OAT_STATIC
                 : k == "OAT_DYNAMIC" ? OAT_DYNAMIC
                                      : OAT_ALL;
      at_set(kind, args[1]);
    } else if (proc == "oat_atdel") {
      need(2);
      at_del(args[0], args[1]);
    } else if (proc == "oat_atinstallinit") {
      install_init();
    } else if (proc == "oat_bpset" || proc == "oat_bpsetval") {
      need(1);
      bp_set(args[0]);
    } else if (proc == "oat_bpsetname") {
      need(3);
      bp_set_name(args[0], args[1], args[2]);
    } else if (proc == "oat_bpsetcdf") {
      need(2);
      bp_set_cdf(args[0], args[1]);
    } else if (proc == "oat_dynpefthis") {
      need(1);
      if (include_atexec) dyn_perf_this(args[0]);
    } else {
      throw OrchestratorError("unknown runtime procedure '" + call.proc + "' (line " +
                              std::to_string(op.line) + ")");
    }
  }
  return report;
}

}  // namespace oat
