#include "oat/codegen.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "oat/search.hpp"
#include "oat/transform.hpp"

namespace fs = std::filesystem;

namespace oat {

namespace {

std::string base_name(const std::string& input_name) {
  std::string base = fs::path(input_name).filename().string();
  size_t dot = base.rfind('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  return base;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return "";
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string stage_word(AtType t) {
  switch (t) {
    case AtType::Install: return "install";
    case AtType::Static: return "static";
    case AtType::Dynamic: return "dynamic";
    case AtType::Formula: return "formula";
  }
  return "?";
}

std::string routine_file(AtType t) {
  switch (t) {
    case AtType::Install: return "OAT_InstallRoutines.f";
    case AtType::Static: return "OAT_StaticRoutines.f";
    case AtType::Dynamic: return "OAT_DynamicRoutines.f";
    case AtType::Formula: return "OAT_ControlRoutines.f";
  }
  return "OAT_ControlRoutines.f";
}

std::string region_block(const Region& r) {
  std::ostringstream os;
  os << "!! region " << r.name << "\n";
  os << "!! at_type " << stage_word(r.at_type) << "\n";
  os << "!! feature " << to_string(r.feature) << "\n";
  if (r.feature != Feature::Define) {
    SearchSpace space = build_space(r);
    os << "!! search "
       << (space.method == SearchMethod::AdHoc ? "AD-HOC" : "Brute-force") << "\n";
    long long variants = 1;
    for (const auto& d : space.dims) {
      os << "!! space " << performance_param_name(r.name, d.name) << " "
         << d.domain.front() << " " << d.domain.back() << "\n";
      variants *= static_cast<long long>(d.domain.size());
    }
    os << "!! variants " << variants << "\n";
  }
  KernelProgram baseline = strip_markers(r.body);
  os << emit_source(baseline);
  os << "!! end region " << r.name << "\n";
  return os.str();
}

// Appends `block` to `path` unless the marker line is already present.
bool append_block(const fs::path& path, const std::string& marker, const std::string& block) {
  std::string existing = read_file(path);
  if (existing.find(marker) != std::string::npos) return false;
  std::ofstream out(path, std::ios::app);
  out << block;
  return true;
}

}  // namespace

CodegenResult generate(const std::string& input_name, const std::string& source,
                       const std::string& out_dir, const CodegenOptions& opt) {
  ProgramUnit unit = parse_unit(source);
  auto violations = validate_nesting(unit);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw ParseError("nesting violation: " + v.rule + " (" + v.outer + " > " + v.inner + ")",
                     0, 0);
  }

  fs::create_directories(out_dir);
  CodegenResult result;
  std::string base = base_name(input_name);

  // Instrumented source: the annotated input, reproduced verbatim.
  {
    fs::path p = fs::path(out_dir) / ("OAT_" + base + ".f");
    std::string marker = "!! source " + base + ".f";
    std::string block = marker + "\n" + source;
    if (!block.empty() && block.back() != '\n') block += "\n";
    if (append_block(p, marker, block)) result.files.push_back(p.string());
  }

  // Stage routine files always exist, even when empty.
  for (AtType t : {AtType::Install, AtType::Static, AtType::Dynamic}) {
    fs::path p = fs::path(out_dir) / routine_file(t);
    if (!fs::exists(p)) {
      std::ofstream touch(p);
      result.files.push_back(p.string());
    }
  }

  std::function<void(const Region&)> emit_region = [&](const Region& r) {
    fs::path p = fs::path(out_dir) / routine_file(r.at_type);
    if (append_block(p, "!! region " + r.name + "\n", region_block(r))) {
      ++result.regions;
      if (std::find(result.files.begin(), result.files.end(), p.string()) ==
          result.files.end())
        result.files.push_back(p.string());
    } else {
      ++result.skipped;
    }
    for (const auto& c : r.children) emit_region(c);
  };
  for (const auto& r : unit.regions) emit_region(r);

  // Control manifest: sources + options + the region table.
  {
    fs::path p = fs::path(out_dir) / "OAT_ControlRoutines.f";
    std::string existing = read_file(p);
    std::ostringstream os;
    if (existing.find("!! options") == std::string::npos) {
      os << "!! options debug=" << (opt.debug ? "ON" : "OFF")
         << " visualization=" << (opt.visualization ? "ON" : "OFF") << "\n";
    }
    std::string src_line = "!! source OAT_" + base + ".f";
    if (existing.find(src_line + "\n") == std::string::npos) os << src_line << "\n";
    std::function<void(const Region&)> table = [&](const Region& r) {
      std::string line = "!! control " + r.name + " " + stage_word(r.at_type) + " " +
                         to_string(r.feature) + " " + routine_file(r.at_type);
      if (existing.find(line + "\n") == std::string::npos) os << line << "\n";
      for (const auto& c : r.children) table(c);
    };
    for (const auto& r : unit.regions) table(r);
    std::string addition = os.str();
    if (!addition.empty()) {
      std::ofstream out(p, std::ios::app);
      out << addition;
      result.files.push_back(p.string());
    }
  }
  return result;
}

ControlManifest read_control(const std::string& out_dir) {
  ControlManifest m;
  std::ifstream in(fs::path(out_dir) / "OAT_ControlRoutines.f");
  if (!in) throw ParseError("no OAT_ControlRoutines.f in '" + out_dir + "' (run codegen first)",
                            0, 0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("!! source ", 0) == 0) {
      m.sources.push_back(line.substr(10));
    } else if (line.rfind("!! options ", 0) == 0) {
      m.debug = line.find("debug=ON") != std::string::npos;
      m.visualization = line.find("visualization=ON") != std::string::npos;
    }
  }
  return m;
}

}  // namespace oat
