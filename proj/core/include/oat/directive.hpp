#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oat/kernel.hpp"

// Lexing and per-line parsing of `!OAT$` directive lines. The sentinel is
// case-insensitive and continuation lines (`!OAT$ & ...`) are joined to the
// preceding directive before parsing.

namespace oat {

enum class AtType { Install, Static, Dynamic, Formula };
enum class Feature { Define, Variable, Select, Unroll, LoopFusionSplit, LoopFusion };
enum class SearchMethod { Default, Exhaustive, AdHoc };

std::string to_string(AtType t);
std::string to_string(Feature f);
std::string to_string(SearchMethod m);

struct ParamDecl {
  enum class Attr { In, Out, Bp };
  std::string name;
  Attr attr = Attr::In;
  std::string origin_region;
};

struct VariedSpec {
  std::vector<std::string> params;  // empty means "use the region's target params"
  long long lo = 0;
  long long hi = 0;
};

struct FitMethod {
  enum class Kind { LeastSquares, Dspline, UserDefined, Auto };
  Kind kind = Kind::Auto;
  int order = 0;
  ExprPtr expr;  // user-defined model
};

struct FittingSpec {
  FitMethod method;
  std::optional<std::string> sample_text;  // e.g. "1-5, 8, 16"
  bool sample_auto = false;
};

struct AccordingClause {
  bool is_min = false;
  std::string min_param;
  ExprPtr condition;  // for condition(...) clauses
};

struct AccordingSpec {
  bool estimated = false;
  ExprPtr cost;  // estimated cost expression
  std::vector<AccordingClause> clauses;
  std::vector<std::string> connectors;  // ".and." / ".or." between clauses
};

// --- directive payload forms ------------------------------------------------

struct DirRegionMarker {
  AtType at_type = AtType::Install;
  Feature feature = Feature::Define;
  std::vector<std::string> target_params;
  bool start = true;
  std::string formula_text;  // raw <formula> auto-tuning type, stored unevaluated
};

struct DirSubRegion {
  enum class Kind { Select, Prepro, Postpro, CopyDef, Rotation };
  Kind kind;
  bool start;
};

struct DirName { std::string value; };
struct DirParameter { std::vector<ParamDecl> decls; };
struct DirVaried { VariedSpec spec; };
struct DirFitting { FittingSpec spec; };
struct DirNumber { int value; };
struct DirDebug { std::vector<std::string> items; };
struct DirAccording { AccordingSpec spec; };
struct DirSearch { SearchMethod method; };
struct DirSplitPoint { std::vector<std::string> vars; };  // as written, order kept
struct DirCopyInsert {};
struct DirCall {
  std::string proc;  // lowercased
  std::vector<std::string> args;  // quotes stripped
};
struct DirAssign {
  std::string name;
  std::string value;
};

using DirectivePayload =
    std::variant<DirRegionMarker, DirSubRegion, DirName, DirParameter, DirVaried,
                 DirFitting, DirNumber, DirDebug, DirAccording, DirSearch,
                 DirSplitPoint, DirCopyInsert, DirCall, DirAssign>;

struct Directive {
  std::string raw_text;  // sentinel payload, continuations joined
  int line_no = 0;       // first physical line
  DirectivePayload payload;
};

// A classified physical source line; continuation lines are merged into the
// directive entry of the line that opened them.
struct ScanLine {
  int line_no = 0;
  std::string text;                     // raw line (for kernel/passthrough lines)
  std::optional<Directive> directive;
};

// True when the line begins with the sentinel (leading blanks allowed);
// `payload` receives the text after the sentinel.
bool match_sentinel(const std::string& line, std::string* payload);

std::vector<ScanLine> scan_source(const std::string& source);

std::vector<Directive> tokenize_directives(const std::string& source);

// Re-emits directive payloads, one per line (round-trip check support).
std::string emit_directives(const std::vector<Directive>& directives);

}  // namespace oat
