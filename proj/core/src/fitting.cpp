#include "oat/fitting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "oat/interp.hpp"

namespace oat {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& s) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw FitError("bad sample point '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FitError("bad sample point '" + s + "'");
  }
}

}  // namespace

SampleSpec parse_sample_spec(const std::string& text) {
  SampleSpec spec;
  std::stringstream ss(text);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    any = true;
    size_t dash = item.find('-', item[0] == '-' ? 1 : 0);
    if (dash == std::string::npos) {
      spec.points.push_back(parse_int(item));
    } else {
      long long a = parse_int(trim(item.substr(0, dash)));
      long long b = parse_int(trim(item.substr(dash + 1)));
      if (a > b)
        throw FitError("reversed sample range '" + item + "'");
      for (long long x = a; x <= b; ++x) spec.points.push_back(x);
    }
  }
  if (!any) throw FitError("empty sample specification");
  std::sort(spec.points.begin(), spec.points.end());
  spec.points.erase(std::unique(spec.points.begin(), spec.points.end()), spec.points.end());
  return spec;
}

FitModel fit_least_squares(const std::vector<std::pair<long long, double>>& samples,
                           int order) {
  if (order < 0) throw FitError("negative polynomial order");
  size_t n = samples.size();
  size_t m = static_cast<size_t>(order) + 1;
  if (n <= static_cast<size_t>(order))
    throw FitError("underdetermined fit: " + std::to_string(n) + " samples for order " +
                   std::to_string(order));

  // Normal equations A^T A c = A^T y, A Vandermonde.
  std::vector<std::vector<double>> M(m, std::vector<double>(m + 1, 0.0));
  for (const auto& [xi, yi] : samples) {
    double x = static_cast<double>(xi);
    std::vector<double> pw(m);
    pw[0] = 1.0;
    for (size_t k = 1; k < m; ++k) pw[k] = pw[k - 1] * x;
    for (size_t r = 0; r < m; ++r) {
      for (size_t c = 0; c < m; ++c) M[r][c] += pw[r] * pw[c];
      M[r][m] += pw[r] * yi;
    }
  }

  // Gaussian elimination with partial pivoting.
  for (size_t col = 0; col < m; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < m; ++r)
      if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
    if (std::fabs(M[piv][col]) < 1e-12)
      throw FitError("singular normal equations (duplicate sample points?)");
    std::swap(M[col], M[piv]);
    for (size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      double f = M[r][col] / M[col][col];
      for (size_t c = col; c <= m; ++c) M[r][c] -= f * M[col][c];
    }
  }

  FitModel model;
  model.kind = FitMethod::Kind::LeastSquares;
  model.order = order;
  model.coefficients.resize(m);
  for (size_t r = 0; r < m; ++r) model.coefficients[r] = M[r][m] / M[r][r];
  return model;
}

double eval_model(const FitModel& model, double x) {
  if (model.kind == FitMethod::Kind::Dspline)
    throw FitError("unsupported method: dspline");
  if (model.kind == FitMethod::Kind::UserDefined)
    throw FitError("user-defined models are evaluated via eval_cost_expression");
  double v = 0.0;
  for (size_t k = model.coefficients.size(); k-- > 0;)
    v = v * x + model.coefficients[k];
  return v;
}

long long predict_optimum(const FitModel& model, long long lo, long long hi) {
  if (lo > hi) throw FitError("empty prediction range");
  long long best = lo;
  double best_v = eval_model(model, static_cast<double>(lo));
  for (long long x = lo + 1; x <= hi; ++x) {
    double v = eval_model(model, static_cast<double>(x));
    if (v < best_v) {
      best_v = v;
      best = x;
    }
  }
  return best;
}

double eval_cost_expression(const ExprPtr& expr,
                            const std::map<std::string, double>& bindings) {
  ExecEnv env;
  for (const auto& [k, v] : bindings) env.scalars[lower(k)] = v;
  return eval_expr(expr, env);
}

CandidateRecord evaluate_according(const AccordingSpec& spec,
                                   const std::vector<CandidateRecord>& candidates) {
  if (spec.estimated)
    throw FitError("according estimated is resolved per branch, not over records");
  if (spec.clauses.empty()) throw FitError("empty according clause");
  if (candidates.empty()) throw FitError("no branch candidates to select from");

  auto passes = [&](const CandidateRecord& rec) {
    bool acc = true;
    bool first = true;
    for (size_t i = 0; i < spec.clauses.size(); ++i) {
      // min clauses are neutral in the filter.
      bool val = true;
      if (!spec.clauses[i].is_min)
        val = eval_cost_expression(spec.clauses[i].condition, rec.values) != 0.0;
      if (first) {
        acc = val;
        first = false;
      } else {
        const std::string& conn = spec.connectors[i - 1];
        acc = (conn == ".or.") ? (acc || val) : (acc && val);
      }
    }
    return acc;
  };

  std::string min_param;
  for (const auto& c : spec.clauses)
    if (c.is_min) {
      min_param = c.min_param;
      break;
    }

  const CandidateRecord* best = nullptr;
  double best_v = 0.0;
  for (const auto& rec : candidates) {
    if (!passes(rec)) continue;
    if (min_param.empty()) {
      if (!best) best = &rec;  // pure condition: first survivor
      continue;
    }
    auto it = rec.values.find(min_param);
    if (it == rec.values.end()) {
      // case-insensitive fallback
      for (const auto& [k, v] : rec.values)
        if (lower(k) == lower(min_param)) {
          it = rec.values.find(k);
          break;
        }
    }
    if (it == rec.values.end())
      throw FitError("candidate " + std::to_string(rec.index) +
                     " does not bind min parameter '" + min_param + "'");
    if (!best || it->second < best_v) {
      best = &rec;
      best_v = it->second;
    }
  }
  if (!best) throw FitError("no branch satisfies conditions");
  return *best;
}

SampleSpec resolve_samples(const FittingSpec& spec, long long lo, long long hi) {
  if (lo > hi) throw FitError("empty varied range");
  if (spec.sample_text) {
    SampleSpec s = parse_sample_spec(*spec.sample_text);
    for (long long p : s.points)
      if (p < lo || p > hi)
        throw FitError("sample point " + std::to_string(p) + " outside varied range [" +
                       std::to_string(lo) + "," + std::to_string(hi) + "]");
    return s;
  }
  // auto scope: every 4th point plus both endpoints
  SampleSpec s;
  for (long long x = lo; x <= hi; x += 4) s.points.push_back(x);
  if (s.points.back() != hi) s.points.push_back(hi);
  return s;
}

int resolve_order(const FitMethod& method, size_t sample_count) {
  switch (method.kind) {
    case FitMethod::Kind::LeastSquares:
      return method.order;
    case FitMethod::Kind::Auto:
      return static_cast<int>(std::min<size_t>(5, sample_count > 0 ? sample_count - 1 : 0));
    case FitMethod::Kind::Dspline:
      throw FitError("unsupported method: dspline");
    case FitMethod::Kind::UserDefined:
      throw FitError("user-defined fitting has no polynomial order");
  }
  return 0;
}

}  // namespace oat
