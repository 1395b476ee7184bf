#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oat/kernel.hpp"

// Sequential interpreter for the kernel language. Interpretation is the
// equivalence oracle for code variants and, in deterministic mode, the
// cost model for tuning runs.

namespace oat {

struct ArrayStore {
  std::vector<long long> extents;  // 1-based dimensions
  std::vector<double> data;        // dense, row-major over extents
};

struct ExecEnv {
  std::map<std::string, double> scalars;
  std::map<std::string, ArrayStore> arrays;
  // When set, references to undeclared arrays allocate sparse storage on
  // demand (elements default to 0). Used by tuning runs where the harness
  // does not size arrays.
  bool auto_allocate = false;
  std::map<std::string, std::map<std::array<long long, 3>, double>> sparse;
  std::uint64_t rng_seed = 0;
};

struct ExecStats {
  std::uint64_t assigns = 0;     // executed assignment parts
  std::uint64_t loop_iters = 0;  // executed loop-control iterations
};

// Allocates declared arrays (extents evaluated against env scalars).
void allocate_declared(const KernelProgram& prog, ExecEnv& env);

// Fills every dense array with deterministic pseudo-random values in [0,1).
void seed_arrays(ExecEnv& env, std::uint64_t seed);

double eval_expr(const ExprPtr& e, const ExecEnv& env);

ExecStats interpret(const KernelProgram& prog, ExecEnv& env);

enum class MeasureMode { Deterministic, Wall };

// Deterministic mode returns the executed-assignment count; wall mode runs
// `repetitions` times on copies of env and returns the median seconds.
double measure(const KernelProgram& prog, const ExecEnv& env, int repetitions,
               MeasureMode mode = MeasureMode::Deterministic);

// Per-element relative comparison of dense arrays (1e-12 default matches
// the variant-equivalence contract). Scalars are ignored: loop counters
// legitimately differ across structurally different variants.
bool envs_equal(const ExecEnv& a, const ExecEnv& b, double rtol = 1e-12);

}  // namespace oat
