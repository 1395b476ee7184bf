#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "oat/directive.hpp"

// Parameter-information files: S-expression read/write, context-scoped
// lookup, the three-stage access hierarchy, execution-order enforcement,
// reserved system parameters, and user-override collision detection.

namespace oat {

class ParamError : public std::runtime_error {
 public:
  ParamError(const std::string& msg, int line = 0, int col = 0)
      : std::runtime_error(line > 0 ? msg + " at line " + std::to_string(line) + ", column " +
                                          std::to_string(col)
                                    : msg),
        line(line),
        col(col) {}
  int line = 0;
  int col = 0;
};

using ParamValue = std::variant<long long, double, std::string>;

std::string value_to_string(const ParamValue& v);
ParamValue parse_value(const std::string& token);  // int if all-digit, else real, else string

// One node: a leaf pair `(key value)`, or a group `(name ...)` whose
// children follow; a group may carry its own value, e.g. `(OAT_PROBSIZE
// 1024 (MyMatMul_I 4))`.
struct ParamNode {
  std::string name;
  std::optional<ParamValue> value;
  std::vector<ParamNode> children;

  bool is_leaf() const { return children.empty() && value.has_value(); }
};

struct ParamTree {
  std::vector<ParamNode> roots;
};

bool node_equal(const ParamNode& a, const ParamNode& b);
bool tree_equal(const ParamTree& a, const ParamTree& b);

ParamTree read_param_file(const std::string& text);
std::string write_param_file(const ParamTree& tree);

// Ordered context: each (key, value) selects the child group with that
// name and value, in order. Missing anything -> ParamError naming the
// full path attempted.
ParamValue lookup(const ParamTree& tree, const std::string& region, const std::string& key,
                  const std::vector<std::pair<std::string, long long>>& context = {});

// --- stages ---------------------------------------------------------------

enum class Stage { Install = 1, Static = 2, Dynamic = 3 };
std::string to_string(Stage s);

// A stage may read parameters originating at its own level or below:
// install-time values are visible everywhere, run-time values only at
// run time.
bool check_stage_access(Stage requesting, Stage param_origin);

struct BasicParamDef {
  std::string name;
  std::string start_name = "OAT_STARTTUNESIZE";
  std::string end_name = "OAT_ENDTUNESIZE";
  std::string dist_name = "OAT_SAMPDIST";
  std::optional<FitMethod> cdf;
};

struct StageState {
  std::set<Stage> completed;
  std::map<std::string, ParamValue> basics;  // current basic-parameter values

  bool has_basic(const std::string& name) const { return basics.count(name) > 0; }
};

enum class OrderCheck { Ok, ErrOrder, ErrNoBp };
constexpr const char* OAT_E_ORDER = "OAT_E_ORDER";
constexpr const char* OAT_E_NOBP = "OAT_E_NOBP";

// install -> static -> dynamic ordering; install and static additionally
// require the four default basic parameters.
OrderCheck enforce_order(const StageState& state, Stage requested);
std::string order_error_code(OrderCheck c);

// --- reserved words ---------------------------------------------------------

const std::vector<std::string>& reserved_words();
bool is_reserved(const std::string& name);

// --- collisions --------------------------------------------------------------

struct Collision {
  std::string region;
  std::string param;
  ParamValue forced_value;
};

// A collision for every pending performance parameter already valued in
// the user tree; tuning must skip those and force the user value.
std::vector<Collision> detect_collision(
    const ParamTree& user_tree,
    const std::vector<std::pair<std::string, std::string>>& pending);

}  // namespace oat
