#pragma once

#include <map>
#include <string>
#include <vector>

#include "oat/kernel.hpp"
#include "oat/region.hpp"

// Variant generation: loop unrolling with cleanup, loop split with
// recomputation copies, loop fusion/collapse with index recovery, and
// pairwise statement interleaving. Every produced program must be
// interpreter-equivalent to its baseline.

namespace oat {

class TransformError : public std::runtime_error {
 public:
  explicit TransformError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Variant {
  std::string id;   // filename-safe
  std::string tag;  // human-readable structural tag or factor assignment
  KernelProgram program;
  std::map<std::string, long long> assignment;  // performance-parameter values
  std::vector<std::string> provenance;          // applied transforms, in order
};

struct VariantSet {
  std::string region_name;
  std::vector<Variant> variants;
};

struct SplitSpec {
  std::vector<std::string> split_loops;  // from `SplitPoint (K, J, I)`, as written
  // Marker positions are discovered in the program's statement stream.
};

struct RotationSpec {
  // Two ordered statement groups delimited by RotationOrder sub regions.
};

// Unrolls each named loop by its factor: body replication with induction
// substitution plus a trailing cleanup loop for non-divisible trip counts.
// Factor 1 leaves the loop structurally identical.
KernelProgram unroll(const KernelProgram& nest,
                     const std::map<std::string, long long>& factors);

// Distributes the loop nest at the loop named `split_var`: statements
// before the SplitPoint marker form the first copy, statements after form
// the second, with the SplitPointCopyDef statements re-computed at the
// SplitPointCopyInsert position.
KernelProgram split_at(const KernelProgram& nest, const std::string& split_var);

// Collapses the listed adjacent perfectly-nested loop levels into a single
// loop; original indices are recovered from the linearized index.
KernelProgram fuse(const KernelProgram& nest, const std::vector<std::string>& levels);

// Like fuse(), but collapses every loop chain headed by `levels[0]` in the
// program (both halves of a split nest).
KernelProgram fuse_each(const KernelProgram& nest, const std::vector<std::string>& levels);

// Returns the grouped ordering (d1 d2 d3 u1 u2 u3) and the pairwise
// interleaved ordering (d1 u1 d2 u2 d3 u3) of the two RotationOrder groups.
std::vector<KernelProgram> reorder_statements(const KernelProgram& body);

// Strips marker statements (baseline extraction).
KernelProgram strip_markers(const KernelProgram& prog);

// Full candidate set for a region, per its feature.
VariantSet enumerate_candidates(const Region& region);

// Performance-parameter name for a varied loop variable, e.g.
// ("MyMatMul", "i") -> "MyMatMul_I".
std::string performance_param_name(const std::string& region_name, const std::string& var);

}  // namespace oat
