#include "oat/interp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace oat {

namespace {

long long checked_index(const ExprPtr& ref, const std::vector<double>& idx,
                        const ArrayStore& store, int line) {
  if (idx.size() != store.extents.size()) {
    std::ostringstream os;
    os << "array '" << ref->name << "' referenced with rank " << idx.size()
       << " but declared rank " << store.extents.size() << " (line " << line << ")";
    throw EvalError(os.str());
  }
  long long flat = 0;
  for (size_t d = 0; d < idx.size(); ++d) {
    long long i = static_cast<long long>(std::llround(idx[d]));
    if (i < 1 || i > store.extents[d]) {
      std::ostringstream os;
      os << "index " << i << " out of bounds [1," << store.extents[d] << "] in dimension "
         << (d + 1) << " of array '" << ref->name << "' (line " << line << ")";
      throw EvalError(os.str());
    }
    flat = flat * store.extents[d] + (i - 1);
  }
  return flat;
}

std::array<long long, 3> sparse_key(const std::vector<double>& idx) {
  std::array<long long, 3> key{0, 0, 0};
  for (size_t d = 0; d < idx.size(); ++d)
    key[d] = static_cast<long long>(std::llround(idx[d]));
  return key;
}

struct Interp {
  ExecEnv& env;
  ExecStats stats;

  double eval(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::IntLit:
        return static_cast<double>(e->int_value);
      case ExprKind::RealLit:
        return e->real_value;
      case ExprKind::ScalarRef: {
        auto it = env.scalars.find(e->name);
        if (it == env.scalars.end())
          throw EvalError("unbound scalar '" + e->name + "'");
        return it->second;
      }
      case ExprKind::ArrayRef:
        return load(e);
      case ExprKind::Unary:
        return -eval(e->args[0]);
      case ExprKind::Binary: {
        const std::string& op = e->name;
        double l = eval(e->args[0]);
        if (op == ".and.") return (l != 0.0 && eval(e->args[1]) != 0.0) ? 1.0 : 0.0;
        if (op == ".or.") return (l != 0.0 || eval(e->args[1]) != 0.0) ? 1.0 : 0.0;
        double r = eval(e->args[1]);
        if (op == "+") return l + r;
        if (op == "-") return l - r;
        if (op == "*") return l * r;
        if (op == "/") return l / r;
        if (op == "**") return std::pow(l, r);
        if (op == "<") return l < r ? 1.0 : 0.0;
        if (op == "<=") return l <= r ? 1.0 : 0.0;
        if (op == ">") return l > r ? 1.0 : 0.0;
        if (op == ">=") return l >= r ? 1.0 : 0.0;
        if (op == "==") return l == r ? 1.0 : 0.0;
        if (op == "/=") return l != r ? 1.0 : 0.0;
        throw EvalError("unknown operator '" + op + "'");
      }
      case ExprKind::Call: {
        const std::string& f = e->name;
        if (f == "abs") return std::fabs(eval(e->args[0]));
        if (f == "dlog" || f == "log") return std::log(eval(e->args[0]));
        if (f == "mod") return std::fmod(eval(e->args[0]), eval(e->args[1]));
        if (f == "int") return std::trunc(eval(e->args[0]));
        if (f == "min" || f == "max") {
          double v = eval(e->args[0]);
          for (size_t i = 1; i < e->args.size(); ++i) {
            double w = eval(e->args[i]);
            v = f == "min" ? std::min(v, w) : std::max(v, w);
          }
          return v;
        }
        throw EvalError("unknown intrinsic '" + f + "'");
      }
    }
    throw EvalError("corrupt expression");
  }

  double load(const ExprPtr& ref) {
    std::vector<double> idx;
    idx.reserve(ref->args.size());
    for (const auto& a : ref->args) idx.push_back(eval(a));
    auto it = env.arrays.find(ref->name);
    if (it != env.arrays.end())
      return it->second.data[checked_index(ref, idx, it->second, ref->pos.line)];
    if (env.auto_allocate) {
      auto& m = env.sparse[ref->name];
      auto sit = m.find(sparse_key(idx));
      return sit == m.end() ? 0.0 : sit->second;
    }
    throw EvalError("reference to undeclared array '" + ref->name + "'");
  }

  void store(const ExprPtr& ref, double value, int line) {
    std::vector<double> idx;
    idx.reserve(ref->args.size());
    for (const auto& a : ref->args) idx.push_back(eval(a));
    auto it = env.arrays.find(ref->name);
    if (it != env.arrays.end()) {
      it->second.data[checked_index(ref, idx, it->second, line)] = value;
      return;
    }
    if (env.auto_allocate) {
      env.sparse[ref->name][sparse_key(idx)] = value;
      return;
    }
    throw EvalError("assignment to undeclared array '" + ref->name + "'");
  }

  void run(const std::vector<StmtPtr>& stmts) {
    for (const auto& s : stmts) run(s);
  }

  void run(const StmtPtr& s) {
    switch (s->kind) {
      case Stmt::Kind::Do: {
        double lo = eval(s->lo);
        double hi = eval(s->hi);
        double step = s->step ? eval(s->step) : 1.0;
        if (step == 0.0) throw EvalError("zero loop step (line " + std::to_string(s->line) + ")");
        double v = lo;
        for (; step > 0 ? v <= hi : v >= hi; v += step) {
          env.scalars[s->var] = v;
          ++stats.loop_iters;
          run(s->body);
        }
        env.scalars[s->var] = v;  // Fortran leaves the first value past the bound
        break;
      }
      case Stmt::Kind::Assign: {
        for (const auto& part : s->assigns) {
          double value = eval(part.rhs);
          if (part.lhs->kind == ExprKind::ScalarRef)
            env.scalars[part.lhs->name] = value;
          else
            store(part.lhs, value, s->line);
          ++stats.assigns;
        }
        break;
      }
      case Stmt::Kind::Passthrough:
      case Stmt::Kind::Marker:
        break;
      case Stmt::Kind::Hole:
        throw EvalError("unmaterialized nested region at line " + std::to_string(s->line));
    }
  }
};

}  // namespace

void allocate_declared(const KernelProgram& prog, ExecEnv& env) {
  for (const auto& d : prog.decls) {
    ArrayStore store;
    long long total = 1;
    for (const auto& e : d.extents) {
      double v = eval_expr(e, env);
      long long n = static_cast<long long>(std::llround(v));
      if (n < 1) throw EvalError("non-positive extent for array '" + d.name + "'");
      store.extents.push_back(n);
      total *= n;
    }
    store.data.assign(static_cast<size_t>(total), 0.0);
    env.arrays[d.name] = std::move(store);
  }
}

void seed_arrays(ExecEnv& env, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  env.rng_seed = seed;
  for (auto& [name, store] : env.arrays)
    for (double& v : store.data) v = dist(rng);
}

double eval_expr(const ExprPtr& e, const ExecEnv& env) {
  Interp it{const_cast<ExecEnv&>(env)};
  return it.eval(e);
}

ExecStats interpret(const KernelProgram& prog, ExecEnv& env) {
  Interp it{env};
  it.run(prog.stmts);
  return it.stats;
}

double measure(const KernelProgram& prog, const ExecEnv& env, int repetitions,
               MeasureMode mode) {
  if (mode == MeasureMode::Deterministic) {
    ExecEnv copy = env;
    return static_cast<double>(interpret(prog, copy).assigns);
  }
  if (repetitions < 1) repetitions = 1;
  std::vector<double> times;
  times.reserve(static_cast<size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    ExecEnv copy = env;
    auto t0 = std::chrono::steady_clock::now();
    interpret(prog, copy);
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

bool envs_equal(const ExecEnv& a, const ExecEnv& b, double rtol) {
  if (a.arrays.size() != b.arrays.size()) return false;
  for (const auto& [name, sa] : a.arrays) {
    auto it = b.arrays.find(name);
    if (it == b.arrays.end()) return false;
    const ArrayStore& sb = it->second;
    if (sa.extents != sb.extents) return false;
    for (size_t i = 0; i < sa.data.size(); ++i) {
      double x = sa.data[i], y = sb.data[i];
      double scale = std::max({std::fabs(x), std::fabs(y), 1e-300});
      if (std::fabs(x - y) > rtol * scale && std::fabs(x - y) > 0) {
        if (std::fabs(x - y) / scale > rtol) return false;
      }
    }
  }
  return true;
}

}  // namespace oat
