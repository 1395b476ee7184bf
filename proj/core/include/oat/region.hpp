#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oat/directive.hpp"
#include "oat/kernel.hpp"

// Region tree: the nesting structure of `!OAT$` tuning regions over the
// kernel program. Bodies are kernel fragments; nested regions appear as
// Hole statements indexed into `children`.

namespace oat {

struct SelectBranch {
  KernelProgram body;
  std::optional<AccordingSpec> according;  // per-branch `according estimated`
};

struct Region {
  AtType at_type = AtType::Install;
  Feature feature = Feature::Define;
  std::vector<std::string> target_params;
  std::string name;  // from the name subtype, or synthesized Region<N>
  bool named = false;
  std::optional<int> number;
  SearchMethod search_method = SearchMethod::Default;

  std::vector<ParamDecl> params;
  std::optional<VariedSpec> varied;
  std::optional<FittingSpec> fitting;
  std::vector<std::string> debug_items;
  std::optional<AccordingSpec> according;  // region-level according

  std::vector<SelectBranch> select_branches;
  KernelProgram prepro;
  KernelProgram postpro;

  KernelProgram body;            // markers kept; nested regions are Holes
  std::vector<Region> children;  // indexed by Hole::hole_index

  int start_line = 0;
  int end_line = 0;
};

// A top-level directive operation (runtime call or assignment) with its
// position among the top-level regions (ops execute in source order).
struct DirectiveOp {
  std::variant<DirCall, DirAssign> op;
  int line = 0;
};

struct ProgramUnit {
  KernelProgram body;  // top-level kernel statements, regions as Holes
  std::vector<Region> regions;
  std::vector<DirectiveOp> ops;  // source order
};

ProgramUnit parse_regions(const std::vector<ScanLine>& lines);
ProgramUnit parse_unit(const std::string& source);

struct NestingViolation {
  std::string outer;
  std::string inner;
  std::string rule;
};

// Table-driven nesting legality plus the depth-3 limit. Violations are
// returned as data, not thrown.
std::vector<NestingViolation> validate_nesting(const ProgramUnit& unit);

bool at_type_nest_allowed(AtType outer, AtType inner);
bool feature_nest_allowed(Feature outer, Feature inner);
bool subtype_allowed(Feature feature, const std::string& subtype);

// Explicit `parameter` declarations, or the inferred default basic
// parameter when the region's loop bounds use exactly one free variable.
class AmbiguousBpError : public std::runtime_error {
 public:
  AmbiguousBpError(std::string msg, std::vector<std::string> candidates)
      : std::runtime_error(std::move(msg)), candidates(std::move(candidates)) {}
  std::vector<std::string> candidates;
};

std::vector<ParamDecl> resolve_parameters(const Region& region);

// All free loop-bound scalar names in the region body (candidates for BP
// inference), in first-appearance order.
std::vector<std::string> loop_bound_variables(const Region& region);

}  // namespace oat
