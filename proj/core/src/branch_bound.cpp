#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "stackheat/milp.hpp"

// Best-bound branch and bound with depth-first plunging: after expanding the
// best open node, keep diving into the child nearest the fractional value
// until the subtree is pruned, then return to the heap. Branching variable:
// most fractional, ties to the lowest index. Node LPs warm-start from the
// parent's optimal basis (children differ only in one bound).
// Trace format (one line per LP solved):
//   node=<id> depth=<d> bound=<LP objective> inc=<incumbent or 'none'> branch=<var or 'leaf'>

namespace stackheat::milp {

namespace {

struct Node {
  int parent = -1;
  int var = -1;
  double blo = -kInf, bhi = kInf;
  double bound = -kInf;  // min-sense bound inherited from the parent LP
  int depth = 0;
  std::shared_ptr<const std::vector<unsigned char>> warm;  // parent's basis
};

struct Open {
  double bound;
  int id;
};
struct OpenCmp {
  bool operator()(const Open& a, const Open& b) const {
    return a.bound > b.bound || (a.bound == b.bound && a.id > b.id);
  }
};

}  // namespace

MilpSolution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const LinearProgram& base = mip.lp;
  base.validate();
  std::vector<int> ints = mip.integer_vars;
  std::sort(ints.begin(), ints.end());
  ints.erase(std::unique(ints.begin(), ints.end()), ints.end());
  for (int v : ints) {
    if (v < 0 || v >= base.num_vars())
      throw std::invalid_argument("milp: integer index " + std::to_string(v) + " out of range");
    if (!std::isfinite(base.lower[v]) || !std::isfinite(base.upper[v]))
      throw std::invalid_argument("milp: integer variable " + std::to_string(v) +
                                  " must have finite bounds");
  }

  const double sflip = base.sense == LinearProgram::Sense::Maximize ? -1.0 : 1.0;
  MilpSolution out;
  out.nodes = 0;

  LinearProgram work = base;  // rows shared across nodes; bounds rewritten per node

  std::vector<Node> pool;
  std::priority_queue<Open, std::vector<Open>, OpenCmp> open;
  pool.push_back(Node{});
  open.push(Open{-kInf, 0});

  double inc_cost = kInf;  // min-sense incumbent
  std::vector<double> inc_x;
  bool have_inc = false;
  bool hit_node_limit = false, hit_time_limit = false, failed = false, unbounded = false;
  double stop_bound = kInf;  // min-sense bound of the node a limit interrupted

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto prune_cut = [&] {
    if (!have_inc) return kInf;
    return inc_cost - std::max(1e-9, opt.rel_gap * (1 + std::abs(inc_cost)));
  };
  auto accept = [&](const std::vector<double>& sol) {
    std::vector<double> x = sol;
    for (int v : ints) x[v] = std::round(x[v]);
    double obj = 0.0;
    for (int j = 0; j < base.num_vars(); ++j) obj += base.objective[j] * x[j];
    double cost = sflip * obj;
    if (!have_inc || cost < inc_cost - 1e-12 * (1 + std::abs(inc_cost))) {
      have_inc = true;
      inc_cost = cost;
      inc_x = std::move(x);
      return true;
    }
    return false;
  };
  // Diving heuristic: from a node's LP optimum, pin every integer variable
  // that already sits at an integral value, push the most fractional one to
  // its nearest integer, re-solve warm, repeat. The pinned set grows each
  // pass, so this ends in at most |ints| passes; any LP failure aborts the
  // dive (the tree is not touched).
  auto rounding_dive = [&](const LinearProgram& node_lp, const LpSolution& start) {
    LinearProgram dived = node_lp;
    LpSolution cur = start;
    const int max_pass = static_cast<int>(ints.size()) + 8;
    for (int pass = 0; pass < max_pass; ++pass) {
      int frac = -1;
      double fdist = opt.int_tol;
      for (int v : ints) {
        double dist = std::abs(cur.x[v] - std::round(cur.x[v]));
        if (dist > fdist) {
          fdist = dist;
          frac = v;
        }
      }
      for (int v : ints) {
        double r = std::round(cur.x[v]);
        if (std::abs(cur.x[v] - r) <= opt.int_tol && dived.lower[v] < dived.upper[v]) {
          r = std::clamp(r, dived.lower[v], dived.upper[v]);
          dived.lower[v] = dived.upper[v] = r;
        }
      }
      if (frac < 0) {
        accept(cur.x);
        return;
      }
      double r = std::clamp(std::round(cur.x[frac]), dived.lower[frac], dived.upper[frac]);
      dived.lower[frac] = dived.upper[frac] = r;
      LpOptions lpopt = opt.lp;
      lpopt.warm_start = &cur.basis_status;
      LpSolution next = solve_lp(dived, lpopt);
      out.simplex_iterations += next.iterations;
      if (next.status != LpStatus::Optimal) return;
      cur = std::move(next);
    }
  };

  // A caller-supplied point seeds the incumbent, but only after it survives
  // the same checks a leaf must pass: finite, inside the bounds, integral on
  // the integer variables, and every row satisfied within tolerance.
  if (opt.incumbent_hint && static_cast<int>(opt.incumbent_hint->size()) == base.num_vars()) {
    const std::vector<double>& h = *opt.incumbent_hint;
    bool ok = true;
    for (int j = 0; ok && j < base.num_vars(); ++j) {
      const double v = h[j];
      ok = std::isfinite(v) && v >= base.lower[j] - 1e-6 * (1.0 + std::abs(base.lower[j])) &&
           v <= base.upper[j] + 1e-6 * (1.0 + std::abs(base.upper[j]));
    }
    for (std::size_t k = 0; ok && k < ints.size(); ++k)
      ok = std::abs(h[ints[k]] - std::round(h[ints[k]])) <= std::max(opt.int_tol, 1e-6);
    for (std::size_t r = 0; ok && r < base.rows.size(); ++r) {
      const Row& row = base.rows[r];
      double act = 0.0, scale = 1.0 + std::abs(row.rhs);
      for (const LinearTerm& t : row.terms) {
        act += t.coeff * h[t.var];
        scale += std::abs(t.coeff * h[t.var]);
      }
      const double tol = 1e-6 * scale;
      if (row.rel == Relation::LessEq)
        ok = act <= row.rhs + tol;
      else if (row.rel == Relation::GreaterEq)
        ok = act >= row.rhs - tol;
      else
        ok = std::abs(act - row.rhs) <= tol;
    }
    if (ok) accept(h);
    if (opt.trace)
      *opt.trace << (ok ? "start incumbent accepted, objective " + std::to_string(sflip * inc_cost)
                        : std::string("start incumbent rejected"))
                 << "\n";
  }

  while (!open.empty() && !failed && !unbounded) {
    Open top = open.top();
    if (have_inc) {
      double gap = (inc_cost - top.bound) / (1 + std::abs(inc_cost));
      if (gap <= opt.rel_gap) break;
    }
    open.pop();
    if (top.bound >= prune_cut()) break;  // heap is bound-ordered: rest is dominated too

    int cur = top.id;
    while (true) {  // plunge
      if (opt.node_limit > 0 && out.nodes >= opt.node_limit) {
        hit_node_limit = true;
        stop_bound = pool[cur].bound;
        break;
      }
      if (opt.time_limit_s > 0 && elapsed() > opt.time_limit_s) {
        hit_time_limit = true;
        stop_bound = pool[cur].bound;
        break;
      }
      work.lower = base.lower;
      work.upper = base.upper;
      for (int a = cur; a >= 0; a = pool[a].parent) {
        const Node& nd = pool[a];
        if (nd.var < 0) continue;
        work.lower[nd.var] = std::max(work.lower[nd.var], nd.blo);
        work.upper[nd.var] = std::min(work.upper[nd.var], nd.bhi);
      }
      bool box_empty = false;
      for (int v : ints)
        if (work.lower[v] > work.upper[v]) box_empty = true;

      LpSolution rel;
      if (box_empty) {
        rel.status = LpStatus::Infeasible;
      } else {
        LpOptions lpopt = opt.lp;
        if (pool[cur].warm) lpopt.warm_start = pool[cur].warm.get();
        rel = solve_lp(work, lpopt);
        if (pool[cur].warm &&
            (rel.status == LpStatus::NumericalFailure || rel.status == LpStatus::IterationLimit)) {
          // A stale parent basis can go singular mid-solve; retry cold.
          out.simplex_iterations += rel.iterations;
          lpopt.warm_start = nullptr;
          rel = solve_lp(work, lpopt);
        }
      }
      ++out.nodes;
      out.simplex_iterations += rel.iterations;

      if (rel.status == LpStatus::Infeasible) break;
      if (rel.status == LpStatus::Unbounded) {
        unbounded = true;
        break;
      }
      if (rel.status != LpStatus::Optimal) {
        failed = true;
        break;
      }
      double cost = sflip * rel.objective;
      pool[cur].bound = cost;
      if (cost >= prune_cut()) {
        if (opt.trace)
          *opt.trace << "node=" << cur << " depth=" << pool[cur].depth << " bound=" << rel.objective
                     << " inc=" << (have_inc ? std::to_string(sflip * inc_cost) : "none")
                     << " branch=pruned\n";
        break;
      }

      int bvar = -1;
      double bdist = opt.int_tol;
      for (int v : ints) {
        double f = rel.x[v] - std::round(rel.x[v]);
        if (std::abs(f) > bdist) {
          bdist = std::abs(f);
          bvar = v;
        }
      }

      if (bvar < 0) {
        accept(rel.x);
        if (opt.trace)
          *opt.trace << "node=" << cur << " depth=" << pool[cur].depth << " bound=" << rel.objective
                     << " inc=" << sflip * inc_cost << " branch=leaf\n";
        break;
      }

      if (out.nodes == 1 || (!have_inc && out.nodes % 25 == 0) ||
          (have_inc && out.nodes % 256 == 0)) {
        rounding_dive(work, rel);
        if (cost >= prune_cut()) break;  // the dive's incumbent covers this node
      }

      if (opt.trace)
        *opt.trace << "node=" << cur << " depth=" << pool[cur].depth << " bound=" << rel.objective
                   << " inc=" << (have_inc ? std::to_string(sflip * inc_cost) : "none")
                   << " branch=" << bvar << "\n";

      double xv = rel.x[bvar];
      auto basis = std::make_shared<const std::vector<unsigned char>>(
          std::move(rel.basis_status));
      Node down;
      down.parent = cur;
      down.var = bvar;
      down.bhi = std::floor(xv);
      down.bound = cost;
      down.depth = pool[cur].depth + 1;
      down.warm = basis;
      Node up;
      up.parent = cur;
      up.var = bvar;
      up.blo = std::ceil(xv);
      up.bound = cost;
      up.depth = pool[cur].depth + 1;
      up.warm = basis;

      bool dive_up = xv - std::floor(xv) >= 0.5;
      pool.push_back(dive_up ? up : down);
      int dive_id = static_cast<int>(pool.size()) - 1;
      pool.push_back(dive_up ? down : up);
      open.push(Open{cost, static_cast<int>(pool.size()) - 1});
      cur = dive_id;
    }
    if (hit_node_limit || hit_time_limit) break;
  }

  // Final bound over everything still open.
  double bound = inc_cost;
  if (hit_node_limit || hit_time_limit) {
    bound = std::min(bound, stop_bound);
    if (!open.empty()) bound = std::min(bound, open.top().bound);
  } else if (!open.empty() && !failed && !unbounded) {
    bound = std::min(bound, open.top().bound);
  }

  out.wall_time_s = elapsed();
  out.has_incumbent = have_inc;
  if (have_inc) {
    out.objective = sflip * inc_cost;
    out.x = inc_x;
    out.best_bound = sflip * bound;
    out.rel_gap = std::max(0.0, (inc_cost - bound) / (1 + std::abs(inc_cost)));
  } else {
    out.best_bound = sflip * bound;
  }

  if (failed) {
    out.status = MilpStatus::NumericalFailure;
  } else if (unbounded) {
    out.status = MilpStatus::Unbounded;
  } else if (hit_node_limit) {
    out.status = MilpStatus::NodeLimit;
  } else if (hit_time_limit) {
    out.status = MilpStatus::TimeLimit;
  } else if (have_inc) {
    out.status = MilpStatus::Optimal;
  } else {
    out.status = MilpStatus::Infeasible;
  }
  return out;
}

}  // namespace stackheat::milp
