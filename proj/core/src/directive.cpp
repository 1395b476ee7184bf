#include "oat/directive.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace oat {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Whitespace-delimited words, with parenthesized groups kept whole.
std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

std::string strip_parens(const std::string& s, int line) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')')
    throw ParseError("expected parenthesized list, got '" + t + "'", line);
  return trim(t.substr(1, t.size() - 2));
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

std::optional<AtType> parse_at_type(const std::string& w) {
  std::string t = lower(w);
  if (t == "install") return AtType::Install;
  if (t == "static") return AtType::Static;
  if (t == "dynamic") return AtType::Dynamic;
  return std::nullopt;
}

std::optional<Feature> parse_feature(const std::string& w) {
  std::string t = lower(w);
  if (t == "define") return Feature::Define;
  if (t == "variable") return Feature::Variable;
  if (t == "select") return Feature::Select;
  if (t == "unroll") return Feature::Unroll;
  if (t == "loopfusionsplit") return Feature::LoopFusionSplit;
  if (t == "loopfusion") return Feature::LoopFusion;
  return std::nullopt;
}

std::vector<std::string> ident_list(const std::string& group, int line) {
  std::vector<std::string> out;
  for (const auto& item : split_commas(strip_parens(group, line))) {
    if (item.empty()) throw ParseError("empty item in list", line);
    out.push_back(item);
  }
  return out;
}

AccordingSpec parse_according(const std::string& rest, int line) {
  AccordingSpec spec;
  std::string t = trim(rest);
  std::string low = lower(t);
  if (low.rfind("estimated", 0) == 0) {
    spec.estimated = true;
    std::string expr_text = trim(t.substr(9));
    if (expr_text.empty()) throw ParseError("'according estimated' needs an expression", line);
    spec.cost = parse_expression(expr_text, line);
    return spec;
  }
  // min(...)/condition(...) clauses joined by .and./.or.
  size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < t.size() && std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
  };
  auto take_group = [&]() -> std::string {
    skip_ws();
    if (pos >= t.size() || t[pos] != '(')
      throw ParseError("expected '(' in according clause", line);
    int depth = 0;
    size_t start = pos;
    for (; pos < t.size(); ++pos) {
      if (t[pos] == '(') ++depth;
      if (t[pos] == ')' && --depth == 0) {
        ++pos;
        return t.substr(start + 1, pos - start - 2);
      }
    }
    throw ParseError("unbalanced parentheses in according clause", line);
  };
  while (true) {
    skip_ws();
    if (pos >= t.size()) break;
    std::string head;
    while (pos < t.size() && (std::isalnum(static_cast<unsigned char>(t[pos])) || t[pos] == '_'))
      head += t[pos++];
    head = lower(head);
    AccordingClause clause;
    if (head == "min") {
      clause.is_min = true;
      clause.min_param = lower(trim(take_group()));
    } else if (head == "condition") {
      clause.condition = parse_expression(take_group(), line);
    } else {
      throw ParseError("expected 'min' or 'condition' in according clause, got '" + head + "'",
                       line);
    }
    spec.clauses.push_back(std::move(clause));
    skip_ws();
    if (pos >= t.size()) break;
    if (t[pos] == '.') {
      size_t end = t.find('.', pos + 1);
      if (end == std::string::npos) throw ParseError("malformed connector", line);
      std::string conn = lower(t.substr(pos, end - pos + 1));
      if (conn != ".and." && conn != ".or.")
        throw ParseError("unknown connector '" + conn + "'", line);
      spec.connectors.push_back(conn);
      pos = end + 1;
    } else {
      throw ParseError("expected '.and.'/'.or.' between according clauses", line);
    }
  }
  if (spec.clauses.empty()) throw ParseError("empty according clause", line);
  return spec;
}

FittingSpec parse_fitting(const std::vector<std::string>& words, int line) {
  FittingSpec spec;
  size_t i = 1;
  if (i >= words.size()) throw ParseError("'fitting' needs a method", line);
  std::string method = lower(words[i++]);
  if (method == "least-squares") {
    spec.method.kind = FitMethod::Kind::LeastSquares;
    if (i >= words.size()) throw ParseError("'least-squares' needs an order", line);
    spec.method.order = std::stoi(words[i++]);
    if (spec.method.order < 0) throw ParseError("negative polynomial order", line);
  } else if (method == "dspline") {
    spec.method.kind = FitMethod::Kind::Dspline;
  } else if (method == "user-defined") {
    spec.method.kind = FitMethod::Kind::UserDefined;
    std::string expr_text;
    while (i < words.size() && lower(words[i]) != "sampled") {
      if (!expr_text.empty()) expr_text += " ";
      expr_text += words[i++];
    }
    if (expr_text.empty()) throw ParseError("'user-defined' needs an expression", line);
    spec.method.expr = parse_expression(expr_text, line);
  } else if (method == "auto") {
    spec.method.kind = FitMethod::Kind::Auto;
  } else {
    throw ParseError("unknown fitting method '" + method + "'", line);
  }
  if (i < words.size()) {
    if (lower(words[i]) != "sampled")
      throw ParseError("expected 'sampled' in fitting clause", line);
    ++i;
    if (i >= words.size()) throw ParseError("'sampled' needs a scope", line);
    std::string scope;
    while (i < words.size()) {
      if (!scope.empty()) scope += " ";
      scope += words[i++];
    }
    if (lower(scope) == "auto")
      spec.sample_auto = true;
    else
      spec.sample_text = strip_parens(scope, line);
  } else if (spec.method.kind != FitMethod::Kind::Auto) {
    throw ParseError("fitting scope may only be omitted for method 'auto'", line);
  }
  return spec;
}

VariedSpec parse_varied(const std::string& rest, int line) {
  VariedSpec spec;
  auto words = split_words(rest);
  size_t i = 0;
  if (i < words.size() && words[i].front() == '(') {
    for (auto& p : ident_list(words[i], line)) spec.params.push_back(lower(p));
    ++i;
  } else if (i < words.size() && std::isdigit(static_cast<unsigned char>(words[i].front()))) {
    // Tolerated shorthand `varied X from Y`: range X..Y over the region's
    // target params.
    long long lo = std::stoll(words[i++]);
    if (i >= words.size() || lower(words[i]) != "from")
      throw ParseError("malformed varied clause", line);
    ++i;
    if (i >= words.size()) throw ParseError("malformed varied clause", line);
    spec.lo = lo;
    spec.hi = std::stoll(words[i++]);
    if (spec.lo > spec.hi) throw ParseError("varied range requires X <= Y", line);
    return spec;
  }
  if (i >= words.size() || lower(words[i]) != "from")
    throw ParseError("expected 'from' in varied clause", line);
  ++i;
  if (i >= words.size()) throw ParseError("varied clause missing lower bound", line);
  spec.lo = std::stoll(words[i++]);
  if (i >= words.size() || lower(words[i]) != "to")
    throw ParseError("expected 'to' in varied clause", line);
  ++i;
  if (i >= words.size()) throw ParseError("varied clause missing upper bound", line);
  spec.hi = std::stoll(words[i++]);
  if (i < words.size()) throw ParseError("trailing tokens in varied clause", line);
  if (spec.lo > spec.hi) throw ParseError("varied range requires X <= Y", line);
  return spec;
}

std::vector<ParamDecl> parse_param_decls(const std::string& group, int line) {
  std::vector<ParamDecl> out;
  for (const auto& item : split_commas(strip_parens(group, line))) {
    auto words = split_words(item);
    if (words.empty()) throw ParseError("empty parameter declaration", line);
    ParamDecl d;
    size_t i = 0;
    std::string a = lower(words[0]);
    if (a == "in" || a == "out" || a == "bp") {
      d.attr = a == "in" ? ParamDecl::Attr::In
                         : (a == "out" ? ParamDecl::Attr::Out : ParamDecl::Attr::Bp);
      i = 1;
    }
    if (i >= words.size()) throw ParseError("parameter declaration missing a name", line);
    d.name = words[i];  // case preserved: out parameters keep their file spelling
    if (i + 1 < words.size()) throw ParseError("malformed parameter declaration", line);
    out.push_back(std::move(d));
  }
  if (out.empty()) throw ParseError("empty parameter list", line);
  return out;
}

DirectivePayload parse_payload(const std::string& text, int line) {
  auto words = split_words(text);
  if (words.empty()) throw ParseError("empty directive", line);
  // Keywords may be glued to their parenthesized payload: parameter(bp n).
  if (size_t lp = words[0].find('('); lp != std::string::npos && lp > 0) {
    bool ident = true;
    for (size_t i = 0; i < lp; ++i)
      ident = ident && (std::isalnum(static_cast<unsigned char>(words[0][i])) ||
                        words[0][i] == '_');
    if (ident) {
      words.insert(words.begin() + 1, words[0].substr(lp));
      words[0] = words[0].substr(0, lp);
    }
  }
  std::string head = lower(words[0]);

  if ((head == "select" || head == "prepro" || head == "postpro" || head == "rotationorder") &&
      words.size() == 4 && lower(words[1]) == "sub" && lower(words[2]) == "region") {
    std::string se = lower(words[3]);
    if (se != "start" && se != "end") throw ParseError("expected 'start' or 'end'", line);
    DirSubRegion::Kind kind = head == "select"    ? DirSubRegion::Kind::Select
                              : head == "prepro"  ? DirSubRegion::Kind::Prepro
                              : head == "postpro" ? DirSubRegion::Kind::Postpro
                                                  : DirSubRegion::Kind::Rotation;
    return DirSubRegion{kind, se == "start"};
  }

  // Region start/end: `<at-type> <feature> [(params)] region (start|end)`.
  if (words.size() >= 3 && lower(words[words.size() - 2]) == "region" &&
      (lower(words.back()) == "start" || lower(words.back()) == "end")) {
    bool start = lower(words.back()) == "start";
    // SplitPointCopyDef uses the `region start/end` suffix but is a sub-group.
    if (head == "splitpointcopydef") {
      if (words.size() != 3) throw ParseError("malformed SplitPointCopyDef directive", line);
      return DirSubRegion{DirSubRegion::Kind::CopyDef, start};
    }
    DirRegionMarker m;
    m.start = start;
    size_t feat_idx = 0;
    std::optional<Feature> feat;
    for (size_t i = 0; i + 2 < words.size() + 0u && i < words.size() - 2; ++i) {
      if (auto f = parse_feature(words[i]); f && i > 0) {
        feat = f;
        feat_idx = i;
        break;
      }
    }
    if (!feat) throw ParseError("region directive missing a feature name", line);
    m.feature = *feat;
    std::string type_text;
    for (size_t i = 0; i < feat_idx; ++i) {
      if (!type_text.empty()) type_text += " ";
      type_text += words[i];
    }
    if (auto t = parse_at_type(type_text)) {
      m.at_type = *t;
    } else {
      // A formula auto-tuning type: stored, never evaluated.
      m.at_type = AtType::Formula;
      m.formula_text = type_text;
    }
    size_t after = feat_idx + 1;
    if (after < words.size() - 2) {
      if (after != words.size() - 3 || words[after].front() != '(')
        throw ParseError("malformed region directive", line);
      for (auto& p : ident_list(words[after], line)) m.target_params.push_back(lower(p));
    }
    return m;
  }

  if (head == "name") {
    if (words.size() != 2) throw ParseError("'name' takes exactly one identifier", line);
    return DirName{words[1]};
  }
  if (head == "parameter") {
    std::string rest = trim(text.substr(text.find(words[0]) + words[0].size()));
    return DirParameter{parse_param_decls(rest, line)};
  }
  if (head == "varied") {
    std::string rest = trim(text.substr(lower(text).find("varied") + 6));
    return DirVaried{parse_varied(rest, line)};
  }
  if (head == "fitting") return DirFitting{parse_fitting(words, line)};
  if (head == "number") {
    if (words.size() != 2) throw ParseError("'number' takes exactly one integer", line);
    return DirNumber{std::stoi(words[1])};
  }
  if (head == "debug") {
    if (words.size() != 2) throw ParseError("'debug' takes a parenthesized list", line);
    std::vector<std::string> items;
    for (auto& p : ident_list(words[1], line)) items.push_back(lower(p));
    return DirDebug{std::move(items)};
  }
  if (head == "according") {
    std::string rest = trim(text.substr(lower(text).find("according") + 9));
    return DirAccording{parse_according(rest, line)};
  }
  if (head == "search") {
    if (words.size() != 2) throw ParseError("'search' takes one method name", line);
    std::string m = lower(words[1]);
    if (m == "brute-force" || m == "exhaustive") return DirSearch{SearchMethod::Exhaustive};
    if (m == "ad-hoc" || m == "adhoc") return DirSearch{SearchMethod::AdHoc};
    throw ParseError("unknown search method '" + words[1] + "'", line);
  }
  if (head == "splitpoint") {
    if (words.size() != 2) throw ParseError("'SplitPoint' takes a loop-variable list", line);
    return DirSplitPoint{ident_list(words[1], line)};
  }
  if (head == "splitpointcopyinsert") {
    if (words.size() != 1) throw ParseError("malformed SplitPointCopyInsert directive", line);
    return DirCopyInsert{};
  }
  if (head == "call") {
    std::string rest = trim(text.substr(lower(text).find("call") + 4));
    size_t lp = rest.find('(');
    if (lp == std::string::npos || rest.back() != ')')
      throw ParseError("malformed runtime call", line);
    DirCall call;
    call.proc = lower(trim(rest.substr(0, lp)));
    std::string args = rest.substr(lp + 1, rest.size() - lp - 2);
    for (const auto& a : split_commas(args)) {
      if (!a.empty()) call.args.push_back(unquote(a));
    }
    return call;
  }
  // `<name> = <value>` assignment directive.
  size_t eq = text.find('=');
  if (eq != std::string::npos && words.size() >= 2) {
    std::string name = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    bool ident_ok = !name.empty() &&
                    std::all_of(name.begin(), name.end(), [](unsigned char c) {
                      return std::isalnum(c) || c == '_';
                    });
    if (ident_ok && !value.empty()) return DirAssign{name, value};
  }
  throw ParseError("unrecognized directive '" + text + "'", line);
}

}  // namespace

std::string to_string(AtType t) {
  switch (t) {
    case AtType::Install: return "install";
    case AtType::Static: return "static";
    case AtType::Dynamic: return "dynamic";
    case AtType::Formula: return "formula";
  }
  return "?";
}

std::string to_string(Feature f) {
  switch (f) {
    case Feature::Define: return "define";
    case Feature::Variable: return "variable";
    case Feature::Select: return "select";
    case Feature::Unroll: return "unroll";
    case Feature::LoopFusionSplit: return "LoopFusionSplit";
    case Feature::LoopFusion: return "LoopFusion";
  }
  return "?";
}

std::string to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::Default: return "default";
    case SearchMethod::Exhaustive: return "exhaustive";
    case SearchMethod::AdHoc: return "ad-hoc";
  }
  return "?";
}

bool match_sentinel(const std::string& line, std::string* payload) {
  size_t p = line.find_first_not_of(" \t");
  if (p == std::string::npos) return false;
  if (line.size() < p + 5) return false;
  if (line[p] != '!') return false;
  std::string tag = lower(line.substr(p + 1, 3));
  if (tag != "oat" || line[p + 4] != '$') return false;
  if (payload) *payload = trim(line.substr(p + 5));
  return true;
}

std::vector<ScanLine> scan_source(const std::string& source) {
  std::vector<ScanLine> out;
  std::istringstream is(source);
  std::string line;
  int n = 0;
  int open_directive = -1;  // index of directive awaiting continuations
  std::vector<std::pair<int, std::string>> pending;  // (line, payload) awaiting parse
  auto flush = [&]() {
    if (pending.empty()) return;
    std::string joined;
    for (const auto& [ln, part] : pending) {
      if (!joined.empty()) joined += " ";
      joined += trim(part);
    }
    Directive d;
    d.raw_text = joined;
    d.line_no = pending.front().first;
    d.payload = parse_payload(joined, d.line_no);
    out.push_back({pending.front().first, "", std::move(d)});
    pending.clear();
  };
  (void)open_directive;
  while (std::getline(is, line)) {
    ++n;
    std::string payload;
    if (match_sentinel(line, &payload)) {
      std::string t = trim(payload);
      if (!t.empty() && t[0] == '&') {
        if (pending.empty())
          throw ParseError("continuation line without a preceding directive", n);
        pending.emplace_back(n, t.substr(1));
        continue;
      }
      flush();
      pending.emplace_back(n, payload);
      continue;
    }
    flush();
    out.push_back({n, line, std::nullopt});
  }
  flush();
  return out;
}

std::vector<Directive> tokenize_directives(const std::string& source) {
  std::vector<Directive> out;
  for (auto& sl : scan_source(source))
    if (sl.directive) out.push_back(*sl.directive);
  return out;
}

std::string emit_directives(const std::vector<Directive>& directives) {
  std::ostringstream os;
  for (const auto& d : directives) os << "!OAT$ " << d.raw_text << "\n";
  return os.str();
}

}  // namespace oat
