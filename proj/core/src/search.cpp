#include "oat/search.hpp"

#include <numeric>

#include "oat/transform.hpp"

namespace oat {

namespace {

SearchMethod resolve(SearchMethod m) {
  return m == SearchMethod::Default ? SearchMethod::Exhaustive : m;
}

// Shared scan state: a frozen current point that the two primitives
// refine in place, logging every evaluation.
struct Engine {
  const std::vector<Dim>& dims;
  const CostFn& cost;
  SearchResult res;
  Assignment cur;

  Engine(const std::vector<Dim>& dims, const CostFn& cost) : dims(dims), cost(cost) {
    for (const auto& d : dims) {
      if (d.domain.empty()) throw SearchError("empty domain for dimension '" + d.name + "'");
      cur.push_back(d.domain.front());
    }
  }

  double eval() {
    double c = cost(cur);
    res.history.push_back({cur, c});
    ++res.evaluations;
    return c;
  }

  // Full cartesian scan over the dims listed in `idx` (outer to inner,
  // last fastest), all other dims frozen. Freezes the winner.
  double exhaustive_over(const std::vector<size_t>& idx) {
    std::vector<size_t> pos(idx.size(), 0);
    bool have_best = false;
    double best_cost = 0.0;
    Assignment best_vals(idx.size());
    while (true) {
      for (size_t k = 0; k < idx.size(); ++k) cur[idx[k]] = dims[idx[k]].domain[pos[k]];
      double c = eval();
      // First strictly-better point wins: scan order is lexicographic,
      // so ties resolve to the smallest assignment.
      if (!have_best || c < best_cost) {
        have_best = true;
        best_cost = c;
        for (size_t k = 0; k < idx.size(); ++k) best_vals[k] = cur[idx[k]];
      }
      size_t k = idx.size();
      while (k > 0) {
        --k;
        if (++pos[k] < dims[idx[k]].domain.size()) break;
        pos[k] = 0;
        if (k == 0) {
          for (size_t j = 0; j < idx.size(); ++j) cur[idx[j]] = best_vals[j];
          return best_cost;
        }
      }
    }
  }

  // Single-pass coordinate descent over `sweep` (in the given order),
  // freezing each dim's winner before moving on.
  double adhoc_over(const std::vector<size_t>& sweep) {
    double last = 0.0;
    for (size_t d : sweep) {
      bool have_best = false;
      double best_cost = 0.0;
      long long best_val = 0;
      for (long long v : dims[d].domain) {
        cur[d] = v;
        double c = eval();
        if (!have_best || c < best_cost) {
          have_best = true;
          best_cost = c;
          best_val = v;
        }
      }
      cur[d] = best_val;
      last = best_cost;
    }
    return last;
  }
};

std::vector<size_t> iota_range(size_t lo, size_t hi) {
  std::vector<size_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

SearchResult exhaustive_search(const SearchSpace& space, const CostFn& cost) {
  if (space.dims.empty()) throw SearchError("empty search space");
  Engine e(space.dims, cost);
  e.res.best_cost = e.exhaustive_over(iota_range(0, space.dims.size()));
  e.res.best = e.cur;
  return std::move(e.res);
}

SearchResult adhoc_search(const SearchSpace& space, const CostFn& cost) {
  if (space.dims.empty()) throw SearchError("empty search space");
  Engine e(space.dims, cost);
  std::vector<size_t> sweep;
  for (size_t d = space.dims.size(); d-- > 0;) sweep.push_back(d);
  e.res.best_cost = e.adhoc_over(sweep);
  e.res.best = e.cur;
  return std::move(e.res);
}

SearchResult run_search(const SearchSpace& space, const CostFn& cost) {
  return resolve(space.method) == SearchMethod::AdHoc ? adhoc_search(space, cost)
                                                      : exhaustive_search(space, cost);
}

namespace {

struct PlanLayout {
  std::vector<Dim> dims;                 // concatenated, plan order
  std::vector<std::vector<size_t>> per;  // dim indices per region
};

PlanLayout layout(const std::vector<SearchSpace>& plan) {
  PlanLayout l;
  for (const auto& s : plan) {
    std::vector<size_t> idx;
    for (const auto& d : s.dims) {
      idx.push_back(l.dims.size());
      l.dims.push_back(d);
    }
    l.per.push_back(std::move(idx));
  }
  return l;
}

}  // namespace

SearchResult composed_search(const std::vector<SearchSpace>& plan, const CostFn& cost) {
  if (plan.empty()) throw SearchError("empty search plan");
  if (plan.size() == 1) return run_search(plan[0], cost);

  SearchMethod outer = resolve(plan[0].method);
  SearchMethod inner = resolve(plan[1].method);
  for (size_t i = 2; i < plan.size(); ++i) {
    if (resolve(plan[i].method) != inner)
      throw SearchError("inner regions use mixed search methods");
  }

  PlanLayout l = layout(plan);
  Engine e(l.dims, cost);
  double best = 0.0;

  if (outer == inner) {
    if (outer == SearchMethod::Exhaustive) {
      best = e.exhaustive_over(iota_range(0, l.dims.size()));
    } else {
      std::vector<size_t> sweep;
      for (size_t d = l.dims.size(); d-- > 0;) sweep.push_back(d);
      best = e.adhoc_over(sweep);
    }
  } else if (outer == SearchMethod::Exhaustive) {
    // Inner AD-HOC regions tuned once, innermost first, then frozen
    // while the outer dims are scanned exhaustively.
    std::vector<size_t> sweep;
    for (size_t r = plan.size(); r-- > 1;)
      for (size_t d = l.per[r].size(); d-- > 0;) sweep.push_back(l.per[r][d]);
    e.adhoc_over(sweep);
    best = e.exhaustive_over(l.per[0]);
  } else {
    // Each inner region fully scanned in turn, innermost first, then
    // the outer dims coordinate-scanned.
    for (size_t r = plan.size(); r-- > 1;) e.exhaustive_over(l.per[r]);
    std::vector<size_t> sweep;
    for (size_t d = l.per[0].size(); d-- > 0;) sweep.push_back(l.per[0][d]);
    best = e.adhoc_over(sweep);
  }

  e.res.best_cost = best;
  e.res.best = e.cur;
  return std::move(e.res);
}

long long count_evaluations(const SearchSpace& space) {
  long long n = 0;
  if (resolve(space.method) == SearchMethod::AdHoc) {
    for (const auto& d : space.dims) n += static_cast<long long>(d.domain.size());
  } else {
    n = 1;
    for (const auto& d : space.dims) n *= static_cast<long long>(d.domain.size());
  }
  return n;
}

long long count_evaluations(const std::vector<SearchSpace>& plan) {
  if (plan.empty()) return 0;
  if (plan.size() == 1) return count_evaluations(plan[0]);
  SearchMethod outer = resolve(plan[0].method);
  SearchMethod inner = resolve(plan[1].method);
  for (size_t i = 2; i < plan.size(); ++i) {
    if (resolve(plan[i].method) != inner)
      throw SearchError("inner regions use mixed search methods");
  }
  auto prod = [](const SearchSpace& s) {
    long long n = 1;
    for (const auto& d : s.dims) n *= static_cast<long long>(d.domain.size());
    return n;
  };
  auto sum = [](const SearchSpace& s) {
    long long n = 0;
    for (const auto& d : s.dims) n += static_cast<long long>(d.domain.size());
    return n;
  };
  if (outer == inner) {
    if (outer == SearchMethod::Exhaustive) {
      long long n = 1;
      for (const auto& s : plan) n *= prod(s);
      return n;
    }
    long long n = 0;
    for (const auto& s : plan) n += sum(s);
    return n;
  }
  long long n = 0;
  if (outer == SearchMethod::Exhaustive) {
    for (size_t i = 1; i < plan.size(); ++i) n += sum(plan[i]);
    n += prod(plan[0]);
  } else {
    for (size_t i = 1; i < plan.size(); ++i) n += prod(plan[i]);
    n += sum(plan[0]);
  }
  return n;
}

SearchSpace build_space(const Region& region) {
  SearchSpace s;
  s.region_name = region.name;
  switch (region.feature) {
    case Feature::Define:
      throw SearchError("define region '" + region.name + "': no search needed");
    case Feature::Unroll:
    case Feature::Variable: {
      if (!region.varied)
        throw SearchError("region '" + region.name + "' has no varied clause");
      VariedSpec v = *region.varied;
      if (v.params.empty()) v.params = region.target_params;
      if (v.params.empty())
        throw SearchError("varied clause of region '" + region.name + "' binds no parameters");
      for (const auto& p : v.params) {
        Dim d;
        d.name = p;
        for (long long x = v.lo; x <= v.hi; ++x) d.domain.push_back(x);
        if (d.domain.empty())
          throw SearchError("empty varied range for parameter '" + p + "'");
        s.dims.push_back(std::move(d));
      }
      s.method = SearchMethod::Exhaustive;
      break;
    }
    case Feature::Select: {
      Dim d;
      d.name = "branch";
      for (size_t i = 0; i < region.select_branches.size(); ++i)
        d.domain.push_back(static_cast<long long>(i) + 1);
      if (d.domain.empty())
        throw SearchError("select region '" + region.name + "' has no sub regions");
      s.dims.push_back(std::move(d));
      s.method = SearchMethod::AdHoc;
      break;
    }
    case Feature::LoopFusionSplit:
    case Feature::LoopFusion: {
      VariantSet vs = enumerate_candidates(region);
      Dim d;
      d.name = "variant";
      for (size_t i = 0; i < vs.variants.size(); ++i)
        d.domain.push_back(static_cast<long long>(i) + 1);
      s.dims.push_back(std::move(d));
      s.method = SearchMethod::Exhaustive;
      break;
    }
  }
  if (region.search_method != SearchMethod::Default) s.method = region.search_method;
  return s;
}

std::map<std::string, long long> to_named(const SearchSpace& space, const Assignment& a) {
  std::map<std::string, long long> m;
  for (size_t i = 0; i < space.dims.size() && i < a.size(); ++i) m[space.dims[i].name] = a[i];
  return m;
}

}  // namespace oat
