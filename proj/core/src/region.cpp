#include "oat/region.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace oat {

namespace {

struct RegionBuilder {
  const std::vector<ScanLine>& lines;
  size_t pos = 0;
  int region_counter = 0;
  std::vector<DirectiveOp>* top_ops = nullptr;
  bool at_top = true;

  // Parses a container body (top level or a region body) until `closer`
  // matches; returns the kernel lines, children and subtype state through
  // the out parameters.
  struct Body {
    std::vector<KernelLine> kernel;
    std::vector<Region> children;
  };

  ProgramUnit parse_top() {
    ProgramUnit unit;
    Body body;
    while (pos < lines.size()) {
      if (!step(&body, nullptr, &unit.ops)) {
        const ScanLine& sl = lines[pos];
        throw ParseError("unexpected '" + sl.directive->raw_text + "'", sl.line_no);
      }
    }
    unit.body = parse_kernel_lines(body.kernel);
    unit.regions = std::move(body.children);
    order_by_number(unit.regions);
    return unit;
  }

  static void order_by_number(std::vector<Region>& regions) {
    std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
      int na = a.number.value_or(std::numeric_limits<int>::max());
      int nb = b.number.value_or(std::numeric_limits<int>::max());
      return na < nb;
    });
  }

  // Handles one line inside a container. Returns false when the current
  // line is a region-end or sub-region-end the caller must consume.
  bool step(Body* body, Region* enclosing, std::vector<DirectiveOp>* ops) {
    const ScanLine& sl = lines[pos];
    if (!sl.directive) {
      body->kernel.push_back({KernelLine::Kind::Text, sl.text, sl.line_no,
                              MarkerKind::SplitPoint, {}, -1});
      ++pos;
      return true;
    }
    const Directive& d = *sl.directive;
    if (auto* m = std::get_if<DirRegionMarker>(&d.payload)) {
      if (!m->start) return false;  // caller closes
      Region child = parse_region(*m, sl.line_no);
      body->kernel.push_back({KernelLine::Kind::Hole, "", sl.line_no, MarkerKind::SplitPoint,
                              {}, static_cast<int>(body->children.size())});
      body->children.push_back(std::move(child));
      return true;
    }
    if (auto* s = std::get_if<DirSubRegion>(&d.payload)) {
      if (!s->start) return false;
      if (!enclosing)
        throw ParseError("sub region outside any tuning region", sl.line_no);
      parse_sub_region(*s, enclosing, body, sl.line_no);
      return true;
    }
    if (auto* sp = std::get_if<DirSplitPoint>(&d.payload)) {
      body->kernel.push_back({KernelLine::Kind::Marker, "", sl.line_no, MarkerKind::SplitPoint,
                              sp->vars, -1});
      ++pos;
      return true;
    }
    if (std::get_if<DirCopyInsert>(&d.payload)) {
      body->kernel.push_back({KernelLine::Kind::Marker, "", sl.line_no, MarkerKind::CopyInsert,
                              {}, -1});
      ++pos;
      return true;
    }
    if (auto* c = std::get_if<DirCall>(&d.payload)) {
      if (!ops)
        throw ParseError("runtime call directives are only supported at the top level",
                         sl.line_no);
      ops->push_back({*c, sl.line_no});
      ++pos;
      return true;
    }
    if (auto* a = std::get_if<DirAssign>(&d.payload)) {
      if (!ops)
        throw ParseError("assignment directives are only supported at the top level",
                         sl.line_no);
      ops->push_back({*a, sl.line_no});
      ++pos;
      return true;
    }
    // Remaining payloads are subtype specifiers; they bind to the region
    // being parsed and are consumed by parse_region's own loop.
    if (!enclosing)
      throw ParseError("subtype specifier outside any tuning region: '" + d.raw_text + "'",
                       sl.line_no);
    apply_subtype(d, enclosing);
    ++pos;
    return true;
  }

  void apply_subtype(const Directive& d, Region* r) {
    const char* subtype_name = nullptr;
    if (auto* n = std::get_if<DirName>(&d.payload)) {
      r->name = n->value;
      r->named = true;
      subtype_name = "name";
    } else if (auto* p = std::get_if<DirParameter>(&d.payload)) {
      for (auto decl : p->decls) {
        for (const auto& existing : r->params)
          if (existing.name == decl.name)
            throw ParseError("parameter '" + decl.name + "' declared twice in region '" +
                                 r->name + "'",
                             d.line_no);
        decl.origin_region = r->name;
        r->params.push_back(std::move(decl));
      }
      subtype_name = "parameter";
    } else if (auto* v = std::get_if<DirVaried>(&d.payload)) {
      VariedSpec spec = v->spec;
      if (spec.params.empty()) spec.params = r->target_params;
      if (spec.params.empty())
        throw ParseError("varied clause has no target parameters", d.line_no);
      r->varied = spec;
      subtype_name = "varied";
    } else if (auto* f = std::get_if<DirFitting>(&d.payload)) {
      r->fitting = f->spec;
      subtype_name = "fitting";
    } else if (auto* n = std::get_if<DirNumber>(&d.payload)) {
      r->number = n->value;
      subtype_name = "number";
    } else if (auto* dbg = std::get_if<DirDebug>(&d.payload)) {
      r->debug_items = dbg->items;
      subtype_name = "debug";
    } else if (auto* acc = std::get_if<DirAccording>(&d.payload)) {
      r->according = acc->spec;
      subtype_name = "according";
    } else if (auto* s = std::get_if<DirSearch>(&d.payload)) {
      r->search_method = s->method;
      subtype_name = "search";
    } else {
      throw ParseError("unexpected directive '" + d.raw_text + "' inside region '" + r->name +
                           "'",
                       d.line_no);
    }
    if (subtype_name && !subtype_allowed(r->feature, subtype_name))
      throw ParseError("subtype '" + std::string(subtype_name) + "' is not available for feature " +
                           to_string(r->feature),
                       d.line_no);
  }

  Region parse_region(const DirRegionMarker& open, int line) {
    ++pos;  // consume start
    Region r;
    r.at_type = open.at_type;
    r.feature = open.feature;
    r.target_params = open.target_params;
    r.start_line = line;
    r.name = "Region" + std::to_string(++region_counter);
    Body body;
    while (pos < lines.size()) {
      if (step(&body, &r, nullptr)) continue;
      const ScanLine& sl = lines[pos];
      const Directive& d = *sl.directive;
      if (auto* m = std::get_if<DirRegionMarker>(&d.payload)) {
        if (m->at_type != open.at_type || m->feature != open.feature)
          throw ParseError("region end does not match open region '" + r.name + "' (" +
                               to_string(open.at_type) + " " + to_string(open.feature) + ")",
                           sl.line_no);
        r.end_line = sl.line_no;
        ++pos;
        r.body = parse_kernel_lines(body.kernel);
        r.children = std::move(body.children);
        order_by_number(r.children);
        for (const auto& child : r.children)
          if (child.number)
            throw ParseError("'number' may only be assigned to the outermost region (region '" +
                                 child.name + "')",
                             child.start_line);
        return r;
      }
      throw ParseError("unexpected sub region end", sl.line_no);
    }
    throw ParseError("missing region end for region '" + r.name + "' (" +
                         to_string(open.at_type) + " " + to_string(open.feature) + ")",
                     line);
  }

  void parse_sub_region(const DirSubRegion& open, Region* r, Body* outer_body, int line) {
    ++pos;  // consume start
    if (open.kind == DirSubRegion::Kind::CopyDef || open.kind == DirSubRegion::Kind::Rotation) {
      // These groups stay in the statement stream as marker pairs.
      MarkerKind start_mark = open.kind == DirSubRegion::Kind::CopyDef ? MarkerKind::CopyDefStart
                                                                       : MarkerKind::RotationStart;
      MarkerKind end_mark = open.kind == DirSubRegion::Kind::CopyDef ? MarkerKind::CopyDefEnd
                                                                     : MarkerKind::RotationEnd;
      outer_body->kernel.push_back(
          {KernelLine::Kind::Marker, "", line, start_mark, {}, -1});
      while (pos < lines.size()) {
        const ScanLine& sl = lines[pos];
        if (sl.directive) {
          if (auto* s = std::get_if<DirSubRegion>(&sl.directive->payload)) {
            if (!s->start && s->kind == open.kind) {
              outer_body->kernel.push_back(
                  {KernelLine::Kind::Marker, "", sl.line_no, end_mark, {}, -1});
              ++pos;
              return;
            }
          }
          throw ParseError("unexpected directive inside sub region", sl.line_no);
        }
        outer_body->kernel.push_back({KernelLine::Kind::Text, sl.text, sl.line_no,
                                      MarkerKind::SplitPoint, {}, -1});
        ++pos;
      }
      throw ParseError("missing sub region end", line);
    }
    // select / prepro / postpro: statements are pulled out of the body.
    std::vector<KernelLine> kernel;
    std::optional<AccordingSpec> branch_according;
    while (pos < lines.size()) {
      const ScanLine& sl = lines[pos];
      if (sl.directive) {
        if (auto* s = std::get_if<DirSubRegion>(&sl.directive->payload)) {
          if (!s->start && s->kind == open.kind) {
            ++pos;
            KernelProgram prog = parse_kernel_lines(kernel);
            switch (open.kind) {
              case DirSubRegion::Kind::Select:
                r->select_branches.push_back({std::move(prog), branch_according});
                break;
              case DirSubRegion::Kind::Prepro:
                r->prepro = std::move(prog);
                break;
              case DirSubRegion::Kind::Postpro:
                r->postpro = std::move(prog);
                break;
              default:
                break;
            }
            return;
          }
        }
        if (auto* acc = std::get_if<DirAccording>(&sl.directive->payload)) {
          if (open.kind == DirSubRegion::Kind::Select) {
            branch_according = acc->spec;
            ++pos;
            continue;
          }
        }
        throw ParseError("unexpected directive inside sub region", sl.line_no);
      }
      kernel.push_back({KernelLine::Kind::Text, sl.text, sl.line_no, MarkerKind::SplitPoint,
                        {}, -1});
      ++pos;
    }
    throw ParseError("missing sub region end", line);
  }
};

}  // namespace

ProgramUnit parse_regions(const std::vector<ScanLine>& lines) {
  RegionBuilder b{lines};
  return b.parse_top();
}

ProgramUnit parse_unit(const std::string& source) {
  return parse_regions(scan_source(source));
}

// --- nesting tables ---------------------------------------------------------

bool at_type_nest_allowed(AtType outer, AtType inner) {
  auto rank = [](AtType t) {
    switch (t) {
      case AtType::Install: return 0;
      case AtType::Static: return 1;
      case AtType::Dynamic: return 2;
      case AtType::Formula: return 2;  // treated like the widest type
    }
    return 2;
  };
  // install may nest only install; static nests install/static;
  // dynamic nests everything.
  return rank(inner) <= rank(outer);
}

bool feature_nest_allowed(Feature outer, Feature inner) {
  // unroll (and the loop-transform features, which behave like unroll:
  // they own their loop nest) may nest nothing; everything else nests
  // everything.
  (void)inner;
  return outer == Feature::Define || outer == Feature::Variable || outer == Feature::Select;
}

bool subtype_allowed(Feature feature, const std::string& subtype) {
  // name, parameter, number, prepro, postpro, debug, search are available
  // for all features.
  if (subtype == "name" || subtype == "parameter" || subtype == "number" ||
      subtype == "prepro" || subtype == "postpro" || subtype == "debug" || subtype == "search")
    return true;
  if (subtype == "varied" || subtype == "fitting")
    return feature == Feature::Variable || feature == Feature::Unroll;
  if (subtype == "according" || subtype == "select")
    return feature == Feature::Select;
  if (subtype == "SplitPoint" || subtype == "SplitPointCopyDef" ||
      subtype == "SplitPointCopyInsert")
    return feature == Feature::LoopFusionSplit;
  if (subtype == "RotationOrder")
    return feature == Feature::LoopFusionSplit || feature == Feature::LoopFusion;
  return false;
}

namespace {

void check_region(const Region& r, int depth, std::vector<NestingViolation>* out) {
  if (depth > 3)
    out->push_back({r.name, r.name, "nesting depth exceeds 3"});
  for (const auto& child : r.children) {
    if (!at_type_nest_allowed(r.at_type, child.at_type))
      out->push_back({r.name, child.name,
                      to_string(r.at_type) + " region may not nest " + to_string(child.at_type)});
    if (!feature_nest_allowed(r.feature, child.feature))
      out->push_back({r.name, child.name,
                      to_string(r.feature) + " region may not nest " + to_string(child.feature)});
    check_region(child, depth + 1, out);
  }
}

}  // namespace

std::vector<NestingViolation> validate_nesting(const ProgramUnit& unit) {
  std::vector<NestingViolation> out;
  for (const auto& r : unit.regions) check_region(r, 1, &out);
  return out;
}

// --- parameter resolution ----------------------------------------------------

namespace {

void collect_scalar_names(const ExprPtr& e, std::vector<std::string>* out) {
  if (!e) return;
  if (e->kind == ExprKind::ScalarRef) {
    if (std::find(out->begin(), out->end(), e->name) == out->end()) out->push_back(e->name);
    return;
  }
  for (const auto& a : e->args) collect_scalar_names(a, out);
}

void collect_loop_bounds(const std::vector<StmtPtr>& stmts, std::set<std::string>* loop_vars,
                         std::vector<std::string>* out) {
  for (const auto& s : stmts) {
    if (s->kind != Stmt::Kind::Do) continue;
    collect_scalar_names(s->lo, out);
    collect_scalar_names(s->hi, out);
    collect_scalar_names(s->step, out);
    loop_vars->insert(s->var);
    collect_loop_bounds(s->body, loop_vars, out);
  }
}

}  // namespace

std::vector<std::string> loop_bound_variables(const Region& region) {
  std::vector<std::string> names;
  std::set<std::string> loop_vars;
  collect_loop_bounds(region.body.stmts, &loop_vars, &names);
  std::vector<std::string> out;
  for (const auto& n : names)
    if (!loop_vars.count(n)) out.push_back(n);
  return out;
}

std::vector<ParamDecl> resolve_parameters(const Region& region) {
  if (!region.params.empty()) return region.params;
  std::vector<std::string> candidates = loop_bound_variables(region);
  if (candidates.empty()) return {};
  if (candidates.size() == 1) {
    ParamDecl d;
    d.name = candidates[0];
    d.attr = ParamDecl::Attr::Bp;
    d.origin_region = region.name;
    return {d};
  }
  std::ostringstream os;
  os << "cannot infer the default basic parameter for region '" << region.name
     << "': candidates are {";
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (i) os << ", ";
    os << candidates[i];
  }
  os << "}; declare one with `parameter(bp ...)`";
  throw AmbiguousBpError(os.str(), candidates);
}

}  // namespace oat
