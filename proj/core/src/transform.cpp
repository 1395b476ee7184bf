#include "oat/transform.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

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

// --- substitution -------------------------------------------------------------

ExprPtr subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::IntLit:
    case ExprKind::RealLit:
      return e;
    case ExprKind::ScalarRef:
      return e->name == var ? repl : e;
    case ExprKind::ArrayRef:
    case ExprKind::Call:
    case ExprKind::Unary:
    case ExprKind::Binary: {
      bool changed = false;
      std::vector<ExprPtr> args;
      args.reserve(e->args.size());
      for (const auto& a : e->args) {
        ExprPtr n = subst(a, var, repl);
        changed |= (n != a);
        args.push_back(n);
      }
      if (!changed) return e;
      auto c = std::make_shared<Expr>(*e);
      c->args = std::move(args);
      return c;
    }
  }
  return e;
}

StmtPtr subst(const StmtPtr& s, const std::string& var, const ExprPtr& repl) {
  auto c = std::make_shared<Stmt>(*s);
  c->body.clear();
  switch (s->kind) {
    case Stmt::Kind::Do:
      c->lo = subst(s->lo, var, repl);
      c->hi = subst(s->hi, var, repl);
      c->step = subst(s->step, var, repl);
      for (const auto& b : s->body) c->body.push_back(subst(b, var, repl));
      break;
    case Stmt::Kind::Assign:
      for (auto& part : c->assigns) {
        part.lhs = subst(part.lhs, var, repl);
        part.rhs = subst(part.rhs, var, repl);
      }
      break;
    default:
      for (const auto& b : s->body) c->body.push_back(clone_stmt(b));
      break;
  }
  return c;
}

// --- loop lookup --------------------------------------------------------------

bool contains_loop(const std::vector<StmtPtr>& stmts, const std::string& var) {
  for (const auto& s : stmts) {
    if (s->kind != Stmt::Kind::Do) continue;
    if (s->var == var) return true;
    if (contains_loop(s->body, var)) return true;
  }
  return false;
}

std::vector<StmtPtr> rewrite_loops(const std::vector<StmtPtr>& stmts, const std::string& var,
                                   const std::function<std::vector<StmtPtr>(const StmtPtr&)>& fn,
                                   bool first_only, bool* done) {
  std::vector<StmtPtr> out;
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Do && s->var == var && !(first_only && *done)) {
      *done = true;
      for (auto& r : fn(s)) out.push_back(std::move(r));
      continue;
    }
    if (s->kind == Stmt::Kind::Do) {
      auto c = std::make_shared<Stmt>(*s);
      c->body = rewrite_loops(s->body, var, fn, first_only, done);
      out.push_back(std::move(c));
      continue;
    }
    out.push_back(clone_stmt(s));
  }
  return out;
}

// --- unroll -------------------------------------------------------------------

std::vector<StmtPtr> unroll_loop(const StmtPtr& loop, long long factor) {
  if (factor < 1) throw TransformError("unroll factor must be positive");
  if (factor == 1) return {clone_stmt(loop)};
  if (loop->step && !(loop->step->kind == ExprKind::IntLit && loop->step->int_value == 1))
    throw TransformError("unroll requires unit-stride loop '" + loop->var + "'");
  ExprPtr lo = loop->lo;
  ExprPtr hi = loop->hi;
  ExprPtr f = make_int(factor);

  auto main = std::make_shared<Stmt>();
  main->kind = Stmt::Kind::Do;
  main->var = loop->var;
  main->lo = lo;
  main->hi = make_binary("-", hi, make_int(factor - 1));
  main->step = f;
  for (long long k = 0; k < factor; ++k) {
    for (const auto& b : loop->body) {
      if (k == 0) {
        main->body.push_back(clone_stmt(b));
      } else {
        ExprPtr shifted = make_binary("+", make_scalar(loop->var), make_int(k));
        main->body.push_back(subst(b, loop->var, shifted));
      }
    }
  }

  // Cleanup covers the trailing trip-count remainder.
  ExprPtr trips = make_binary("+", make_binary("-", hi, lo), make_int(1));
  ExprPtr rem = make_call("mod", {trips, f});
  auto cleanup = std::make_shared<Stmt>();
  cleanup->kind = Stmt::Kind::Do;
  cleanup->var = loop->var;
  cleanup->lo = make_binary("+", make_binary("-", hi, rem), make_int(1));
  cleanup->hi = hi;
  for (const auto& b : loop->body) cleanup->body.push_back(clone_stmt(b));

  return {main, cleanup};
}

}  // namespace

KernelProgram unroll(const KernelProgram& nest,
                     const std::map<std::string, long long>& factors) {
  KernelProgram out = clone_program(nest);
  for (const auto& [name, factor] : factors) {
    std::string var = lower(name);
    if (!contains_loop(out.stmts, var))
      throw TransformError("unroll target loop '" + var + "' not found");
    bool done = false;
    out.stmts = rewrite_loops(
        out.stmts, var, [&](const StmtPtr& loop) { return unroll_loop(loop, factor); },
        /*first_only=*/true, &done);
  }
  return out;
}

// --- split --------------------------------------------------------------------

namespace {

// Finds the statement list that directly contains a SplitPoint marker and
// replaces it via `fn`; returns true if found.
bool replace_marker_body(std::vector<StmtPtr>& stmts,
                         const std::function<std::vector<StmtPtr>(std::vector<StmtPtr>)>& fn) {
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Marker && s->marker == MarkerKind::SplitPoint) {
      stmts = fn(std::move(stmts));
      return true;
    }
  }
  for (auto& s : stmts) {
    if (s->kind == Stmt::Kind::Do && replace_marker_body(s->body, fn)) return true;
  }
  return false;
}

struct SplitParts {
  std::vector<StmtPtr> before;
  std::vector<StmtPtr> after;
};

SplitParts split_marker_list(const std::vector<StmtPtr>& stmts) {
  SplitParts parts;
  std::vector<StmtPtr> copy_def;
  bool in_copy_def = false;
  bool seen_split = false;
  bool seen_insert = false;
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Marker) {
      switch (s->marker) {
        case MarkerKind::SplitPoint:
          if (seen_split) throw TransformError("multiple SplitPoint markers in one body");
          seen_split = true;
          continue;
        case MarkerKind::CopyDefStart:
          if (seen_split)
            throw TransformError("SplitPointCopyDef must precede the split point");
          in_copy_def = true;
          continue;
        case MarkerKind::CopyDefEnd:
          in_copy_def = false;
          continue;
        case MarkerKind::CopyInsert:
          if (!seen_split)
            throw TransformError("SplitPointCopyInsert must follow the split point");
          if (copy_def.empty())
            throw TransformError("SplitPointCopyInsert with empty SplitPointCopyDef");
          seen_insert = true;
          for (const auto& c : copy_def) parts.after.push_back(clone_stmt(c));
          continue;
        default:
          continue;
      }
    }
    std::vector<StmtPtr>& target = seen_split ? parts.after : parts.before;
    target.push_back(clone_stmt(s));
    if (in_copy_def) copy_def.push_back(s);
  }
  (void)seen_insert;
  if (!seen_split) throw TransformError("no SplitPoint marker in loop body");
  if (parts.after.empty()) throw TransformError("degenerate split: no statements after the split point");
  if (parts.before.empty()) throw TransformError("degenerate split: no statements before the split point");
  return parts;
}

std::vector<StmtPtr> strip_marker_stmts(const std::vector<StmtPtr>& stmts) {
  std::vector<StmtPtr> out;
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Marker) continue;
    auto c = std::make_shared<Stmt>(*s);
    c->body = strip_marker_stmts(s->body);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

KernelProgram strip_markers(const KernelProgram& prog) {
  KernelProgram out;
  out.decls = prog.decls;
  out.stmts = strip_marker_stmts(prog.stmts);
  return out;
}

KernelProgram split_at(const KernelProgram& nest, const std::string& split_var) {
  std::string var = lower(split_var);
  KernelProgram out = clone_program(nest);
  if (!contains_loop(out.stmts, var))
    throw TransformError("split target loop '" + var + "' not found");
  bool done = false;
  out.stmts = rewrite_loops(
      out.stmts, var,
      [&](const StmtPtr& loop) -> std::vector<StmtPtr> {
        StmtPtr first = clone_stmt(loop);
        StmtPtr second = clone_stmt(loop);
        bool found1 = replace_marker_body(first->body, [](std::vector<StmtPtr> list) {
          return split_marker_list(list).before;
        });
        bool found2 = replace_marker_body(second->body, [](std::vector<StmtPtr> list) {
          return split_marker_list(list).after;
        });
        if (!found1 || !found2)
          throw TransformError("no SplitPoint marker inside loop '" + var + "'");
        return {first, second};
      },
      /*first_only=*/true, &done);
  return out;
}

// --- fuse ---------------------------------------------------------------------

namespace {

void collect_names(const ExprPtr& e, std::set<std::string>* out) {
  if (!e) return;
  if (e->kind == ExprKind::ScalarRef || e->kind == ExprKind::ArrayRef ||
      e->kind == ExprKind::Call)
    out->insert(e->name);
  for (const auto& a : e->args) collect_names(a, out);
}

void collect_names(const std::vector<StmtPtr>& stmts, std::set<std::string>* out) {
  for (const auto& s : stmts) {
    out->insert(s->var.empty() ? "" : s->var);
    collect_names(s->lo, out);
    collect_names(s->hi, out);
    collect_names(s->step, out);
    for (const auto& part : s->assigns) {
      collect_names(part.lhs, out);
      collect_names(part.rhs, out);
    }
    collect_names(s->body, out);
  }
}

StmtPtr fuse_chain(const StmtPtr& head, const std::vector<std::string>& levels,
                   const std::string& fused_var) {
  // Walk the perfect chain, collecting bounds.
  std::vector<ExprPtr> los, his;
  const Stmt* cur = head.get();
  for (size_t i = 0; i < levels.size(); ++i) {
    if (cur->kind != Stmt::Kind::Do || cur->var != levels[i])
      throw TransformError("loops " + levels[i] + " are not perfectly nested for fusion");
    if (cur->step && !(cur->step->kind == ExprKind::IntLit && cur->step->int_value == 1))
      throw TransformError("fusion requires unit-stride loops");
    los.push_back(cur->lo);
    his.push_back(cur->hi);
    if (i + 1 < levels.size()) {
      if (cur->body.size() != 1 || cur->body[0]->kind != Stmt::Kind::Do)
        throw TransformError("loops are not perfectly nested at level '" + levels[i] + "'");
      cur = cur->body[0].get();
    }
  }
  const std::vector<StmtPtr>& inner_body = cur->body;

  size_t n = levels.size();
  std::vector<ExprPtr> trips(n);
  for (size_t i = 0; i < n; ++i)
    trips[i] = make_binary("+", make_binary("-", his[i], los[i]), make_int(1));

  ExprPtr total = trips[0];
  for (size_t i = 1; i < n; ++i) total = make_binary("*", total, trips[i]);

  auto fused = std::make_shared<Stmt>();
  fused->kind = Stmt::Kind::Do;
  fused->var = fused_var;
  fused->lo = make_int(1);
  fused->hi = total;

  ExprPtr t = make_binary("-", make_scalar(fused_var), make_int(1));
  for (size_t j = 0; j < n; ++j) {
    // Trailing product of trip counts below level j.
    ExprPtr tail;
    for (size_t k = j + 1; k < n; ++k)
      tail = tail ? make_binary("*", tail, trips[k]) : trips[k];
    ExprPtr q = tail ? make_call("int", {make_binary("/", t, tail)}) : t;
    if (j > 0) q = make_call("mod", {q, trips[j]});
    fused->body.push_back(make_assign(make_scalar(levels[j]), make_binary("+", los[j], q)));
  }
  for (const auto& b : inner_body) fused->body.push_back(clone_stmt(b));
  return fused;
}

std::string fresh_name(const KernelProgram& prog, const std::string& base) {
  std::set<std::string> used;
  collect_names(prog.stmts, &used);
  if (!used.count(base)) return base;
  for (int i = 2;; ++i) {
    std::string name = base + std::to_string(i);
    if (!used.count(name)) return name;
  }
}

KernelProgram fuse_impl(const KernelProgram& nest, const std::vector<std::string>& raw_levels,
                        bool every) {
  std::vector<std::string> levels;
  for (const auto& l : raw_levels) levels.push_back(lower(l));
  if (levels.empty()) throw TransformError("fuse needs at least one loop level");
  KernelProgram out = clone_program(nest);
  if (levels.size() == 1) return out;  // single level: identity
  if (!contains_loop(out.stmts, levels[0]))
    throw TransformError("fuse target loop '" + levels[0] + "' not found");
  std::string fused_var = fresh_name(out, "oat_idx");
  bool done = false;
  out.stmts = rewrite_loops(
      out.stmts, levels[0],
      [&](const StmtPtr& head) -> std::vector<StmtPtr> {
        return {fuse_chain(head, levels, fused_var)};
      },
      /*first_only=*/!every, &done);
  return out;
}

}  // namespace

KernelProgram fuse(const KernelProgram& nest, const std::vector<std::string>& levels) {
  return fuse_impl(nest, levels, /*every=*/false);
}

KernelProgram fuse_each(const KernelProgram& nest, const std::vector<std::string>& levels) {
  return fuse_impl(nest, levels, /*every=*/true);
}

// --- statement reordering -----------------------------------------------------

namespace {

struct RotationGroups {
  std::vector<StmtPtr>* list = nullptr;  // statement list containing the groups
  size_t span_begin = 0, span_end = 0;   // marker-inclusive range in *list
  std::vector<StmtPtr> group1, group2;
};

bool find_rotation(std::vector<StmtPtr>& stmts, RotationGroups* out) {
  int state = 0;  // 0 outside, 1 in group1, 2 between, 3 in group2
  size_t begin = 0;
  std::vector<StmtPtr> g1, g2;
  for (size_t i = 0; i < stmts.size(); ++i) {
    const StmtPtr& s = stmts[i];
    if (s->kind == Stmt::Kind::Marker && s->marker == MarkerKind::RotationStart) {
      if (state == 0) {
        begin = i;
        state = 1;
      } else if (state == 2) {
        state = 3;
      } else {
        throw TransformError("unexpected RotationOrder sub region start");
      }
      continue;
    }
    if (s->kind == Stmt::Kind::Marker && s->marker == MarkerKind::RotationEnd) {
      if (state == 1) {
        state = 2;
      } else if (state == 3) {
        out->list = &stmts;
        out->span_begin = begin;
        out->span_end = i;
        out->group1 = std::move(g1);
        out->group2 = std::move(g2);
        return true;
      } else {
        throw TransformError("unexpected RotationOrder sub region end");
      }
      continue;
    }
    if (state == 1) g1.push_back(s);
    if (state == 3) g2.push_back(s);
    if (state == 2 && s->kind != Stmt::Kind::Passthrough)
      throw TransformError("statements between RotationOrder groups are not supported");
  }
  if (state != 0) throw TransformError("unterminated RotationOrder sub region");
  for (auto& s : stmts)
    if (s->kind == Stmt::Kind::Do && find_rotation(s->body, out)) return true;
  return false;
}

}  // namespace

std::vector<KernelProgram> reorder_statements(const KernelProgram& body) {
  KernelProgram work = clone_program(body);
  RotationGroups rot;
  if (!find_rotation(work.stmts, &rot))
    throw TransformError("no RotationOrder sub regions found");
  if (rot.group1.size() != rot.group2.size())
    throw TransformError("RotationOrder groups must have equal length (" +
                         std::to_string(rot.group1.size()) + " vs " +
                         std::to_string(rot.group2.size()) + ")");
  KernelProgram grouped = strip_markers(body);

  std::vector<StmtPtr> interleave;
  for (size_t i = 0; i < rot.group1.size(); ++i) {
    interleave.push_back(clone_stmt(rot.group1[i]));
    interleave.push_back(clone_stmt(rot.group2[i]));
  }
  auto& list = *rot.list;
  std::vector<StmtPtr> replaced(list.begin(), list.begin() + rot.span_begin);
  for (auto& s : interleave) replaced.push_back(std::move(s));
  replaced.insert(replaced.end(), list.begin() + rot.span_end + 1, list.end());
  list = std::move(replaced);
  KernelProgram interleaved;
  interleaved.decls = work.decls;
  interleaved.stmts = strip_marker_stmts(work.stmts);

  return {grouped, interleaved};
}

// --- candidate enumeration ------------------------------------------------------

std::string performance_param_name(const std::string& region_name, const std::string& var) {
  return region_name + "_" + upper(var);
}

namespace {

const std::vector<std::string>* find_split_vars(const std::vector<StmtPtr>& stmts) {
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Marker && s->marker == MarkerKind::SplitPoint)
      return &s->marker_vars;
    if (s->kind == Stmt::Kind::Do) {
      if (auto* v = find_split_vars(s->body)) return v;
    }
  }
  return nullptr;
}

bool has_marker(const std::vector<StmtPtr>& stmts, MarkerKind kind) {
  for (const auto& s : stmts) {
    if (s->kind == Stmt::Kind::Marker && s->marker == kind) return true;
    if (s->kind == Stmt::Kind::Do && has_marker(s->body, kind)) return true;
  }
  return false;
}

// Outermost perfect loop chain vars (up to 3) of the region body.
std::vector<std::string> loop_chain_vars(const KernelProgram& body) {
  const Stmt* cur = nullptr;
  for (const auto& s : body.stmts) {
    if (s->kind == Stmt::Kind::Do) {
      cur = s.get();
      break;
    }
  }
  std::vector<std::string> vars;
  while (cur && vars.size() < 3) {
    vars.push_back(cur->var);
    const Stmt* next = nullptr;
    int loops = 0;
    for (const auto& b : cur->body) {
      if (b->kind == Stmt::Kind::Do) {
        ++loops;
        next = b.get();
      } else if (b->kind != Stmt::Kind::Passthrough && b->kind != Stmt::Kind::Marker) {
        loops = 2;  // imperfect: statements beside the loop
        break;
      }
    }
    cur = loops == 1 ? next : nullptr;
  }
  return vars;
}

void enumerate_fusion_split(const Region& region, VariantSet* out) {
  const auto* vars = find_split_vars(region.body.stmts);
  if (!vars || vars->empty())
    throw TransformError("LoopFusionSplit region '" + region.name +
                         "' has no SplitPoint directive");
  const std::vector<std::string>& split_vars = *vars;
  std::vector<std::string> loops;
  for (const auto& v : split_vars) loops.push_back(lower(v));

  auto pp = performance_param_name(region.name, "variant");
  auto add = [&](const std::string& id, const std::string& tag, KernelProgram prog,
                 std::vector<std::string> prov) {
    Variant v;
    v.id = id;
    v.tag = tag;
    v.program = std::move(prog);
    v.assignment[pp] = static_cast<long long>(out->variants.size()) + 1;
    v.provenance = std::move(prov);
    out->variants.push_back(std::move(v));
  };

  std::string outer_raw = split_vars[0];
  auto join = [](const std::vector<std::string>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) {
      if (i) s += ",";
      s += vs[i];
    }
    return s;
  };

  add("baseline", "baseline", strip_markers(region.body), {});
  for (size_t i = 0; i < split_vars.size(); ++i) {
    add("split_" + loops[i], "split@" + split_vars[i],
        strip_markers(split_at(region.body, loops[i])), {"split@" + split_vars[i]});
  }
  if (loops.size() >= 2) {
    std::vector<std::string> two(loops.begin(), loops.begin() + 2);
    add("fuse_" + two[0] + two[1], "fuse(" + join(two) + ")",
        strip_markers(fuse(strip_markers(region.body), two)), {"fuse(" + join(two) + ")"});
    add("split_" + loops[0] + "_fuse_" + two[0] + two[1],
        "split@" + outer_raw + "+fuse(" + join(two) + ")",
        strip_markers(fuse_each(split_at(region.body, loops[0]), two)),
        {"split@" + outer_raw, "fuse(" + join(two) + ")"});
  }
  if (loops.size() >= 3) {
    std::vector<std::string> all(loops.begin(), loops.begin() + 3);
    add("fuse_" + all[0] + all[1] + all[2], "fuse(" + join(all) + ")",
        strip_markers(fuse(strip_markers(region.body), all)), {"fuse(" + join(all) + ")"});
    add("split_" + loops[0] + "_fuse_" + all[0] + all[1] + all[2],
        "split@" + outer_raw + "+fuse(" + join(all) + ")",
        strip_markers(fuse_each(split_at(region.body, loops[0]), all)),
        {"split@" + outer_raw, "fuse(" + join(all) + ")"});
  }
}

void enumerate_fusion(const Region& region, VariantSet* out) {
  bool has_rotation = has_marker(region.body.stmts, MarkerKind::RotationStart);
  std::vector<std::pair<std::string, KernelProgram>> orderings;
  if (has_rotation) {
    auto progs = reorder_statements(region.body);
    orderings.emplace_back("", std::move(progs[0]));
    orderings.emplace_back("interleaved", std::move(progs[1]));
  } else {
    orderings.emplace_back("", strip_markers(region.body));
  }
  std::vector<std::string> chain = loop_chain_vars(orderings[0].second);
  std::vector<std::pair<std::string, std::vector<std::string>>> fusions;
  fusions.emplace_back("", std::vector<std::string>{});
  if (chain.size() >= 2)
    fusions.emplace_back("fuse(" + chain[0] + "," + chain[1] + ")",
                         std::vector<std::string>{chain[0], chain[1]});
  if (chain.size() >= 3)
    fusions.emplace_back("fuse(" + chain[0] + "," + chain[1] + "," + chain[2] + ")", chain);

  auto pp = performance_param_name(region.name, "variant");
  std::set<std::string> seen;
  for (const auto& [otag, oprog] : orderings) {
    for (const auto& [ftag, levels] : fusions) {
      KernelProgram prog = levels.empty() ? clone_program(oprog) : fuse(oprog, levels);
      std::string text = emit_source(prog);
      if (!seen.insert(text).second) continue;
      std::string tag = otag.empty() && ftag.empty() ? "baseline"
                        : otag.empty()               ? ftag
                        : ftag.empty()               ? otag
                                                     : otag + "+" + ftag;
      std::string id = tag;
      for (char& c : id)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
      Variant v;
      v.id = id;
      v.tag = tag;
      v.program = std::move(prog);
      v.assignment[pp] = static_cast<long long>(out->variants.size()) + 1;
      if (!otag.empty()) v.provenance.push_back(otag);
      if (!ftag.empty()) v.provenance.push_back(ftag);
      out->variants.push_back(std::move(v));
    }
  }
}

void enumerate_varied(const Region& region, VariantSet* out) {
  if (!region.varied)
    throw TransformError("region '" + region.name + "' has no varied clause");
  VariedSpec v = *region.varied;
  if (v.params.empty()) v.params = region.target_params;
  if (v.params.empty())
    throw TransformError("varied clause of region '" + region.name + "' binds no parameters");
  KernelProgram baseline = strip_markers(region.body);
  std::vector<long long> values(v.params.size(), v.lo);
  while (true) {
    Variant var;
    std::ostringstream id, tag;
    std::map<std::string, long long> factors;
    for (size_t i = 0; i < v.params.size(); ++i) {
      std::string pp = performance_param_name(region.name, v.params[i]);
      var.assignment[pp] = values[i];
      factors[v.params[i]] = values[i];
      if (i) id << "_";
      id << v.params[i] << values[i];
      tag << "(" << pp << " " << values[i] << ")";
    }
    var.id = id.str();
    var.tag = tag.str();
    if (region.feature == Feature::Unroll) {
      var.program = unroll(baseline, factors);
      var.provenance.push_back("unroll " + var.tag);
    } else {
      var.program = clone_program(baseline);  // variable: values bind scalars
    }
    out->variants.push_back(std::move(var));
    // Advance odometer, last param fastest.
    size_t i = v.params.size();
    while (i > 0) {
      --i;
      if (++values[i] <= v.hi) break;
      values[i] = v.lo;
      if (i == 0) return;
    }
  }
}

void enumerate_select(const Region& region, VariantSet* out) {
  if (region.select_branches.empty())
    throw TransformError("select region '" + region.name + "' has no select sub regions");
  std::string pp = performance_param_name(region.name, "select");
  for (size_t i = 0; i < region.select_branches.size(); ++i) {
    Variant v;
    v.id = "b" + std::to_string(i + 1);
    v.tag = "branch " + std::to_string(i + 1);
    v.program = clone_program(region.select_branches[i].body);
    v.assignment[pp] = static_cast<long long>(i) + 1;
    v.provenance.push_back("select branch " + std::to_string(i + 1));
    out->variants.push_back(std::move(v));
  }
}

}  // namespace

VariantSet enumerate_candidates(const Region& region) {
  VariantSet out;
  out.region_name = region.name;
  switch (region.feature) {
    case Feature::LoopFusionSplit:
      enumerate_fusion_split(region, &out);
      break;
    case Feature::LoopFusion:
      enumerate_fusion(region, &out);
      break;
    case Feature::Unroll:
    case Feature::Variable:
      enumerate_varied(region, &out);
      break;
    case Feature::Select:
      enumerate_select(region, &out);
      break;
    case Feature::Define:
      throw TransformError("define regions have no variants to enumerate");
  }
  return out;
}

}  // namespace oat
