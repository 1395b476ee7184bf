#pragma once

#include <string>
#include <vector>

#include "oat/region.hpp"

// Source generation: splits an annotated program into the five output
// files (instrumented source, per-stage routine files, control manifest).
// The routine files hold kernel-language region code plus a
// machine-readable manifest header; they are driven by the interpreter,
// not compiled.

namespace oat {

struct CodegenOptions {
  bool debug = false;
  bool visualization = false;
};

struct CodegenResult {
  std::vector<std::string> files;  // paths written or appended to
  int regions = 0;
  int skipped = 0;  // region blocks already present (idempotent append)
};

// `input_name` is the original file name (e.g. "test.f"); `out_dir` is
// created if missing. Existing files are appended non-destructively:
// a region block already present is not added twice.
CodegenResult generate(const std::string& input_name, const std::string& source,
                       const std::string& out_dir, const CodegenOptions& opt);

struct ControlManifest {
  std::vector<std::string> sources;  // instrumented source file names
  bool debug = false;
  bool visualization = false;
};

ControlManifest read_control(const std::string& out_dir);

}  // namespace oat
