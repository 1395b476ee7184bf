#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "oat/directive.hpp"
#include "oat/region.hpp"

// Search over performance-parameter spaces. Two engines: exhaustive
// (full cartesian product) and AD-HOC (single-pass coordinate descent,
// last dimension first, earlier winners pinned). Composed search runs
// a plan of nested-region spaces, outermost first.

namespace oat {

class SearchError : public std::runtime_error {
 public:
  explicit SearchError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Dim {
  std::string name;
  std::vector<long long> domain;  // ordered, as declared
};

struct SearchSpace {
  std::string region_name;
  std::vector<Dim> dims;
  SearchMethod method = SearchMethod::Default;
};

using Assignment = std::vector<long long>;  // positional, parallel to dims

// Cost oracle. Lower is better. Called once per evaluated point.
using CostFn = std::function<double(const Assignment&)>;

struct Evaluation {
  Assignment point;
  double cost = 0.0;
};

struct SearchResult {
  Assignment best;
  double best_cost = 0.0;
  long long evaluations = 0;
  std::vector<Evaluation> history;  // in evaluation order
};

// Cartesian-product scan, last dimension fastest. Ties keep the
// lexicographically smallest point (dim order, domain order).
SearchResult exhaustive_search(const SearchSpace& space, const CostFn& cost);

// One pass, last dim down to first, each dim scanned fully with all
// other dims frozen (initially every domain's first value, then at each
// dim's winner). Evaluates sum(|domain_i|) points.
SearchResult adhoc_search(const SearchSpace& space, const CostFn& cost);

// Dispatch on space.method; Default resolves to exhaustive.
SearchResult run_search(const SearchSpace& space, const CostFn& cost);

// Composed search over nested regions, plan[0] outermost. The assignment
// is positional over the concatenated dims in plan order. Supported
// method combinations:
//   all exhaustive            -> full cartesian product
//   all AD-HOC                -> single pass, innermost region's dims first
//   outer exhaustive + AD-HOC -> inner regions tuned once (innermost first)
//                                and frozen, then outer scanned exhaustively
//   outer AD-HOC + exhaustive -> each inner region fully scanned in turn
//                                (innermost first) and frozen, then outer
//                                coordinate-scanned
// Anything else throws SearchError.
SearchResult composed_search(const std::vector<SearchSpace>& plan, const CostFn& cost);

// Analytic evaluation counts; equal to the SearchResult's `evaluations`.
long long count_evaluations(const SearchSpace& space);
long long count_evaluations(const std::vector<SearchSpace>& plan);

// Space construction from a region's varied/select/variant structure.
// Default search method per feature: variable/unroll/fusion -> exhaustive,
// select -> AD-HOC; an explicit `search` subtype wins.
SearchSpace build_space(const Region& region);

std::map<std::string, long long> to_named(const SearchSpace& space, const Assignment& a);

}  // namespace oat
