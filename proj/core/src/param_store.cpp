#include "oat/param_store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace oat {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string value_to_string(const ParamValue& v) {
  if (std::holds_alternative<long long>(v)) return std::to_string(std::get<long long>(v));
  if (std::holds_alternative<double>(v)) {
    std::ostringstream os;
    os << std::get<double>(v);
    return os.str();
  }
  return std::get<std::string>(v);
}

ParamValue parse_value(const std::string& token) {
  // Booleans normalize to 0/1 integers.
  std::string lo = lower(token);
  if (lo == ".true.") return static_cast<long long>(1);
  if (lo == ".false.") return static_cast<long long>(0);
  if (!token.empty()) {
    size_t start = (token[0] == '-' || token[0] == '+') ? 1 : 0;
    if (start < token.size() &&
        std::all_of(token.begin() + start, token.end(),
                    [](unsigned char c) { return std::isdigit(c); })) {
      long long iv = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), iv);
      if (ec == std::errc() && p == token.data() + token.size()) return iv;
    }
    // Fortran-style d exponents read as e exponents.
    std::string norm = token;
    for (char& c : norm) {
      if (c == 'd' || c == 'D') c = 'e';
    }
    char* end = nullptr;
    double dv = std::strtod(norm.c_str(), &end);
    if (end == norm.c_str() + norm.size() && norm.size() > start) return dv;
  }
  return token;
}

bool node_equal(const ParamNode& a, const ParamNode& b) {
  if (a.name != b.name || a.value != b.value || a.children.size() != b.children.size())
    return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!node_equal(a.children[i], b.children[i])) return false;
  return true;
}

bool tree_equal(const ParamTree& a, const ParamTree& b) {
  if (a.roots.size() != b.roots.size()) return false;
  for (size_t i = 0; i < a.roots.size(); ++i)
    if (!node_equal(a.roots[i], b.roots[i])) return false;
  return true;
}

// --- reader --------------------------------------------------------------------

namespace {

struct Reader {
  const std::string& text;
  size_t pos = 0;
  int line = 1, col = 1;

  explicit Reader(const std::string& t) : text(t) {}

  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance();
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() { return text[pos]; }

  std::string token() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      advance();
    if (pos == start) throw ParamError("expected token", line, col);
    return text.substr(start, pos - start);
  }

  ParamNode node() {
    skip_ws();
    if (pos >= text.size() || text[pos] != '(')
      throw ParamError("expected '('", line, col);
    int open_line = line, open_col = col;
    advance();
    ParamNode n;
    n.name = token();
    std::set<std::string> child_names;
    bool saw_child = false;
    while (true) {
      skip_ws();
      if (pos >= text.size())
        throw ParamError("unbalanced parentheses: '(' never closed", open_line, open_col);
      if (text[pos] == ')') {
        advance();
        return n;
      }
      if (text[pos] == '(') {
        int child_line = line, child_col = col;
        ParamNode c = node();
        // Leaves must be unique by name; context groups may repeat a name
        // (e.g. one OAT_PROBSIZE group per grid point) but not a value.
        std::string key = c.name;
        if (!c.is_leaf()) key += "\x01" + (c.value ? value_to_string(*c.value) : "");
        if (!child_names.insert(key).second)
          throw ParamError("duplicate key '" + c.name + "' in group '" + n.name + "'",
                           child_line, child_col);
        n.children.push_back(std::move(c));
        saw_child = true;
        continue;
      }
      if (n.value || saw_child)
        throw ParamError("unexpected token in group '" + n.name + "'", line, col);
      n.value = parse_value(token());
    }
  }
};

}  // namespace

ParamTree read_param_file(const std::string& text) {
  Reader r(text);
  ParamTree tree;
  while (!r.eof()) {
    if (r.peek() != '(')
      throw ParamError("expected '(' at top level", r.line, r.col);
    tree.roots.push_back(r.node());
  }
  return tree;
}

// --- writer --------------------------------------------------------------------

namespace {

void write_node(std::ostringstream& out, const ParamNode& n, int depth) {
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  if (n.is_leaf()) {
    out << indent << "(" << n.name << " " << value_to_string(*n.value) << ")\n";
    return;
  }
  out << indent << "(" << n.name;
  if (n.value) out << " " << value_to_string(*n.value);
  out << "\n";
  for (const auto& c : n.children) write_node(out, c, depth + 1);
  out << indent << ")\n";
}

}  // namespace

std::string write_param_file(const ParamTree& tree) {
  std::ostringstream out;
  for (const auto& n : tree.roots) write_node(out, n, 0);
  return out.str();
}

// --- lookup --------------------------------------------------------------------

ParamValue lookup(const ParamTree& tree, const std::string& region, const std::string& key,
                  const std::vector<std::pair<std::string, long long>>& context) {
  std::string path = region;
  const ParamNode* group = nullptr;
  for (const auto& r : tree.roots)
    if (r.name == region) {
      group = &r;
      break;
    }
  if (!group) throw ParamError("not found: region '" + path + "'");
  for (const auto& [ckey, cval] : context) {
    path += " / (" + ckey + " " + std::to_string(cval) + ")";
    const ParamNode* next = nullptr;
    for (const auto& c : group->children) {
      if (c.name != ckey || !c.value) continue;
      if (std::holds_alternative<long long>(*c.value) &&
          std::get<long long>(*c.value) == cval) {
        next = &c;
        break;
      }
    }
    if (!next) throw ParamError("not found: " + path);
    group = next;
  }
  for (const auto& c : group->children)
    if (c.name == key && c.value) return *c.value;
  throw ParamError("not found: " + path + " / " + key);
}

// --- stages --------------------------------------------------------------------

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Install: return "install";
    case Stage::Static: return "static";
    case Stage::Dynamic: return "dynamic";
  }
  return "?";
}

bool check_stage_access(Stage requesting, Stage param_origin) {
  return static_cast<int>(requesting) >= static_cast<int>(param_origin);
}

OrderCheck enforce_order(const StageState& state, Stage requested) {
  if (requested == Stage::Install || requested == Stage::Static) {
    for (const char* bp :
         {"OAT_NUMPROCS", "OAT_STARTTUNESIZE", "OAT_ENDTUNESIZE", "OAT_SAMPDIST"})
      if (!state.has_basic(bp)) return OrderCheck::ErrNoBp;
  }
  if (requested == Stage::Static && !state.completed.count(Stage::Install))
    return OrderCheck::ErrOrder;
  if (requested == Stage::Dynamic &&
      (!state.completed.count(Stage::Install) || !state.completed.count(Stage::Static)))
    return OrderCheck::ErrOrder;
  return OrderCheck::Ok;
}

std::string order_error_code(OrderCheck c) {
  switch (c) {
    case OrderCheck::Ok: return "";
    case OrderCheck::ErrOrder: return OAT_E_ORDER;
    case OrderCheck::ErrNoBp: return OAT_E_NOBP;
  }
  return "";
}

// --- reserved words --------------------------------------------------------------

const std::vector<std::string>& reserved_words() {
  static const std::vector<std::string> words = {
      "OAT_ALL",
      "OAT_INSTALL",
      "OAT_STATIC",
      "OAT_DYNAMIC",
      "OAT_AllRoutines",
      "OAT_InstallRoutines",
      "OAT_StaticRoutines",
      "OAT_DynamicRoutines",
      "OAT_NUMPROCS",
      "OAT_STARTTUNESIZE",
      "OAT_ENDTUNESIZE",
      "OAT_SAMPDIST",
      "OAT_TUNESTATIC",
      "OAT_TUNEDYNAMIC",
      "OAT_DEBUG",
  };
  return words;
}

bool is_reserved(const std::string& name) {
  std::string lo = lower(name);
  for (const auto& w : reserved_words())
    if (lower(w) == lo) return true;
  return false;
}

// --- collisions -------------------------------------------------------------------

std::vector<Collision> detect_collision(
    const ParamTree& user_tree,
    const std::vector<std::pair<std::string, std::string>>& pending) {
  std::vector<Collision> out;
  for (const auto& [region, param] : pending) {
    try {
      ParamValue v = lookup(user_tree, region, param);
      out.push_back({region, param, v});
    } catch (const ParamError&) {
      // not user-specified: no collision
    }
  }
  return out;
}

}  // namespace oat
