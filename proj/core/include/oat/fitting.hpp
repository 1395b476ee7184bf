#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oat/directive.hpp"
#include "oat/kernel.hpp"

// Parameter inference: sample-spec parsing, least-squares polynomial
// fitting over sampled measurements, optimum prediction over the varied
// range, cost-expression evaluation, and `according` branch selection.

namespace oat {

class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SampleSpec {
  std::vector<long long> points;  // sorted, deduplicated
};

// "1-5, 8, 16" -> {1,2,3,4,5,8,16}. Reversed ranges are an error.
SampleSpec parse_sample_spec(const std::string& text);

struct FitModel {
  FitMethod::Kind kind = FitMethod::Kind::LeastSquares;
  int order = 0;
  std::vector<double> coefficients;  // a0 + a1 x + ... + a_order x^order
  ExprPtr expr;                      // user-defined model
};

// Normal-equations least squares; exact interpolation when
// |samples| == order+1. Underdetermined (|samples| <= order) is an error.
FitModel fit_least_squares(const std::vector<std::pair<long long, double>>& samples,
                           int order);

double eval_model(const FitModel& model, double x);

// Integer argmin of the model over [lo, hi]; ties break to the smallest x.
long long predict_optimum(const FitModel& model, long long lo, long long hi);

// Evaluates a cost expression against scalar bindings (names matched
// case-insensitively). Unbound names raise an error naming them.
double eval_cost_expression(const ExprPtr& expr,
                            const std::map<std::string, double>& bindings);

struct CandidateRecord {
  int index = 0;  // sub-region order, 1-based
  std::map<std::string, double> values;
};

// `according min(...)/condition(...)` selection: condition clauses filter
// (combined left-to-right with the .and./.or. connectors; min clauses are
// neutral in the filter), then the first min target picks the smallest
// survivor. Ties keep declaration order.
CandidateRecord evaluate_according(const AccordingSpec& spec,
                                   const std::vector<CandidateRecord>& candidates);

// Materializes a fitting directive's sample scope over [lo, hi].
// `auto` scope = every 4th point plus both endpoints.
SampleSpec resolve_samples(const FittingSpec& spec, long long lo, long long hi);

// Effective polynomial order for a fitting method and sample count.
// `auto` method = min(5, samples-1); dspline raises "unsupported method".
int resolve_order(const FitMethod& method, size_t sample_count);

}  // namespace oat
