// oat: directive-driven auto-tuning preprocessor and pipeline driver.
//
//   oat codegen <file.f> [-debug ON|OFF] [-visualization ON|OFF] [--out DIR]
//   oat tune <dir> <install|static|dynamic|all> [--mode deterministic|wall]
//            [--invoke] [-debug ON|OFF] [-visualization ON|OFF]
//
// When invoked as OATCodeGen (argv[0] contains "codegen"), the codegen
// subcommand is implied:  OATCodeGen test.f -debug ON
//
// Exit codes: 0 ok, 2 parse error, 3 validation error, 4 order/basic-
// parameter error, 5 runtime error.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oat/codegen.hpp"
#include "oat/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace oat;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void usage(int code) {
  std::cerr << "usage: oat codegen <file.f> [-debug ON|OFF] [-visualization ON|OFF]"
               " [--out DIR]\n"
               "       oat tune <dir> <install|static|dynamic|all>"
               " [--mode deterministic|wall] [--invoke]\n"
               "       [-debug ON|OFF] [-visualization ON|OFF]\n";
  std::exit(code);
}

// -debug / --debug / -visualization take ON|OFF (case-insensitive).
bool parse_on_off(const std::string& flag, const std::string& value) {
  std::string v = lower(value);
  if (v == "on") return true;
  if (v == "off") return false;
  std::cerr << "oat: " << flag << " expects ON or OFF, got '" << value << "'\n";
  std::exit(2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "oat: cannot open '" << path << "'\n";
    std::exit(2);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_codegen(const std::vector<std::string>& args) {
  std::string input, out_dir = "OAT";
  CodegenOptions opt;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= args.size()) {
        std::cerr << "oat: " << a << " needs a value\n";
        std::exit(2);
      }
      return args[++i];
    };
    if (a == "-debug" || a == "--debug")
      opt.debug = parse_on_off(a, value());
    else if (a == "-visualization" || a == "--visualization")
      opt.visualization = parse_on_off(a, value());
    else if (a == "--out")
      out_dir = value();
    else if (!a.empty() && a[0] == '-')
      usage(2);
    else if (input.empty())
      input = a;
    else
      usage(2);
  }
  if (input.empty()) usage(2);

  try {
    CodegenResult res = generate(input, read_file(input), out_dir, opt);
    std::cout << "oat: " << res.regions << " region(s) generated";
    if (res.skipped) std::cout << ", " << res.skipped << " already present";
    std::cout << " under " << out_dir << "/\n";
    for (const auto& f : res.files) std::cout << "  " << f << "\n";
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "oat: " << input << ": " << e.what() << "\n";
    return std::string(e.what()).find("nesting violation") != std::string::npos ? 3 : 2;
  } catch (const AmbiguousBpError& e) {
    std::cerr << "oat: " << input << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "oat: " << e.what() << "\n";
    return 5;
  }
}

int run_tune(const std::vector<std::string>& args) {
  std::string dir, stage;
  OrchestratorOptions opt;
  bool invoke = false;
  bool debug_set = false, viz_set = false;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= args.size()) {
        std::cerr << "oat: " << a << " needs a value\n";
        std::exit(2);
      }
      return args[++i];
    };
    if (a == "--mode") {
      std::string m = lower(value());
      if (m == "wall")
        opt.mode = MeasureMode::Wall;
      else if (m == "deterministic")
        opt.mode = MeasureMode::Deterministic;
      else {
        std::cerr << "oat: --mode expects deterministic or wall\n";
        return 2;
      }
    } else if (a == "--invoke") {
      invoke = true;
    } else if (a == "-debug" || a == "--debug") {
      opt.debug = parse_on_off(a, value()) ? 1 : 0;
      debug_set = true;
    } else if (a == "-visualization" || a == "--visualization") {
      opt.visualization = parse_on_off(a, value());
      viz_set = true;
    } else if (a == "--seed") {
      opt.seed = std::stoull(value());
    } else if (!a.empty() && a[0] == '-') {
      usage(2);
    } else if (dir.empty()) {
      dir = a;
    } else if (stage.empty()) {
      stage = lower(a);
    } else {
      usage(2);
    }
  }
  if (dir.empty() || stage.empty()) usage(2);
  if (stage != "install" && stage != "static" && stage != "dynamic" && stage != "all")
    usage(2);
  opt.dir = dir;

  try {
    ControlManifest manifest = read_control(dir);
    if (!debug_set && manifest.debug) opt.debug = 1;
    if (!viz_set) opt.visualization = manifest.visualization;

    // All generated sources tune as one unit so regions can share state.
    ProgramUnit unit;
    for (const auto& src : manifest.sources) {
      ProgramUnit part = parse_unit(read_file((fs::path(dir) / src).string()));
      for (auto& r : part.regions) unit.regions.push_back(std::move(r));
      for (auto& op : part.ops) unit.ops.push_back(std::move(op));
      for (auto& s : part.body.stmts) unit.body.stmts.push_back(std::move(s));
    }
    auto violations = validate_nesting(unit);
    if (!violations.empty()) {
      for (const auto& v : violations)
        std::cerr << "oat: nesting violation: " << v.rule << " (" << v.outer << " > "
                  << v.inner << ")\n";
      return 3;
    }

    Orchestrator orch(std::move(unit), opt);
    orch.run_ops(/*include_atexec=*/false);

    int kind = stage == "install" ? OAT_INSTALL
               : stage == "static" ? OAT_STATIC
               : stage == "dynamic" ? OAT_DYNAMIC
                                    : OAT_ALL;
    long long predicted = orch.predict_evaluations(kind);
    TuningReport report = orch.at_exec(
        kind, kind == OAT_INSTALL ? "OAT_InstallRoutines"
              : kind == OAT_STATIC ? "OAT_StaticRoutines"
              : kind == OAT_DYNAMIC ? "OAT_DynamicRoutines"
                                    : "OAT_AllRoutines");
    std::vector<RegionReport> dyn;
    if (invoke && (kind == OAT_DYNAMIC || kind == OAT_ALL)) dyn = orch.invoke_all_dynamic();

    for (const auto& rr : report.regions) {
      std::cout << rr.stage << " " << rr.region << ": ";
      if (rr.chosen.empty()) std::cout << "(no parameters)";
      for (const auto& [k, v] : rr.chosen) std::cout << "(" << k << " " << value_to_string(v) << ")";
      std::cout << " [" << rr.evaluations << " evaluations]";
      for (const auto& c : rr.collisions)
        std::cout << " [forced " << c.param << "=" << value_to_string(c.forced_value) << "]";
      std::cout << "\n";
    }
    for (const auto& rr : dyn) {
      std::cout << "dynamic " << rr.region << ": ";
      for (const auto& [k, v] : rr.chosen) std::cout << "(" << k << " " << value_to_string(v) << ")";
      std::cout << " [" << rr.evaluations << " evaluations]\n";
    }
    std::cout << "predicted evaluations: " << predicted
              << ", trace records: " << orch.trace().size() << "\n";
    orch.flush_trace();
    return 0;
  } catch (const OrchestratorError& e) {
    std::cerr << "oat: tune " << stage << ": " << e.what() << "\n";
    return e.code.empty() ? 5 : 4;
  } catch (const ParseError& e) {
    std::cerr << "oat: tune " << stage << ": " << e.what() << "\n";
    return 2;
  } catch (const AmbiguousBpError& e) {
    std::cerr << "oat: tune " << stage << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "oat: tune " << stage << ": " << e.what() << "\n";
    return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string prog = lower(fs::path(argv[0]).filename().string());
  if (prog.find("codegen") != std::string::npos) return run_codegen(args);
  if (args.empty()) usage(2);
  std::string cmd = lower(args[0]);
  args.erase(args.begin());
  if (cmd == "codegen") return run_codegen(args);
  if (cmd == "tune") return run_tune(args);
  usage(2);
}
