#include <algorithm>
#include <cmath>
#include <vector>

#include "lu.hpp"
#include "stackheat/milp.hpp"

// Bounded-variable revised primal simplex. Computational form: minimize c.x
// over A x + s = b with slacks s carrying the row's admissible range, both
// structural and slack variables boxed. Composite phase 1 drives the sum of
// basic bound violations to zero, phase 2 optimizes. Dantzig pricing, Bland's
// rule after a degenerate streak, sparse LU basis with product-form updates,
// geometric-mean scaling rounded to powers of two.

namespace stackheat::milp {

namespace {

using detail::BasisFactor;
using detail::SparseColumn;

constexpr unsigned char kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeNB = 3;
constexpr double kPivTol = 1e-9;
constexpr double kDegenTheta = 1e-10;
constexpr int kBlandTrigger = 50;
constexpr int kRefactorEvery = 64;

struct Prepared {
  int m = 0, n = 0, N = 0;  // rows, structurals, structurals + slacks
  std::vector<int> col_start, col_row;
  std::vector<double> col_val;
  std::vector<double> cost, lo, hi;  // internal minimize, scaled
  std::vector<double> b;             // scaled rhs
  std::vector<double> rscale, cscale;
  std::vector<SparseColumn> cols;  // per-variable column for factorization
  double flip = 1.0;               // -1 when the caller maximizes
};

double scale_factor(double geo) { return std::exp2(-std::round(std::log2(geo))); }

Prepared prepare(const LinearProgram& lp, const LpOptions& opt) {
  Prepared P;
  P.m = static_cast<int>(lp.rows.size());
  P.n = lp.num_vars();
  P.N = P.n + P.m;
  P.flip = lp.sense == LinearProgram::Sense::Maximize ? -1.0 : 1.0;

  // Canonical rows: terms sorted by variable, duplicates merged.
  std::vector<std::vector<LinearTerm>> merged(P.m);
  for (int i = 0; i < P.m; ++i) {
    std::vector<LinearTerm> t = lp.rows[i].terms;
    std::sort(t.begin(), t.end(), [](const LinearTerm& a, const LinearTerm& b) { return a.var < b.var; });
    for (const LinearTerm& e : t) {
      if (!merged[i].empty() && merged[i].back().var == e.var)
        merged[i].back().coeff += e.coeff;
      else
        merged[i].push_back(e);
    }
    std::erase_if(merged[i], [](const LinearTerm& e) { return e.coeff == 0.0; });
  }

  P.rscale.assign(P.m, 1.0);
  P.cscale.assign(P.n, 1.0);
  if (opt.scale) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < P.m; ++i) {
        double mx = 0.0, mn = kInf;
        for (const LinearTerm& e : merged[i]) {
          double v = std::abs(P.rscale[i] * e.coeff * P.cscale[e.var]);
          if (v > 0) {
            mx = std::max(mx, v);
            mn = std::min(mn, v);
          }
        }
        if (mx > 0) P.rscale[i] = std::clamp(P.rscale[i] * scale_factor(std::sqrt(mx * mn)), 0x1p-20, 0x1p20);
      }
      std::vector<double> cmx(P.n, 0.0), cmn(P.n, kInf);
      for (int i = 0; i < P.m; ++i) {
        for (const LinearTerm& e : merged[i]) {
          double v = std::abs(P.rscale[i] * e.coeff * P.cscale[e.var]);
          if (v > 0) {
            cmx[e.var] = std::max(cmx[e.var], v);
            cmn[e.var] = std::min(cmn[e.var], v);
          }
        }
      }
      for (int j = 0; j < P.n; ++j)
        if (cmx[j] > 0) P.cscale[j] = std::clamp(P.cscale[j] * scale_factor(std::sqrt(cmx[j] * cmn[j])), 0x1p-20, 0x1p20);
    }
  }

  // CSC over structural columns, then slack identity columns.
  std::vector<int> count(P.n, 0);
  for (int i = 0; i < P.m; ++i)
    for (const LinearTerm& e : merged[i]) ++count[e.var];
  P.col_start.assign(P.N + 1, 0);
  for (int j = 0; j < P.n; ++j) P.col_start[j + 1] = P.col_start[j] + count[j];
  for (int i = 0; i < P.m; ++i) P.col_start[P.n + i + 1] = P.col_start[P.n + i] + 1;
  P.col_row.resize(P.col_start[P.N]);
  P.col_val.resize(P.col_start[P.N]);
  std::vector<int> fill(P.n, 0);
  for (int i = 0; i < P.m; ++i) {
    for (const LinearTerm& e : merged[i]) {
      int at = P.col_start[e.var] + fill[e.var]++;
      P.col_row[at] = i;
      P.col_val[at] = P.rscale[i] * e.coeff * P.cscale[e.var];
    }
  }
  for (int i = 0; i < P.m; ++i) {
    P.col_row[P.col_start[P.n + i]] = i;
    P.col_val[P.col_start[P.n + i]] = 1.0;
  }

  P.cost.assign(P.N, 0.0);
  P.lo.assign(P.N, 0.0);
  P.hi.assign(P.N, 0.0);
  for (int j = 0; j < P.n; ++j) {
    P.cost[j] = P.flip * lp.objective[j] * P.cscale[j];
    P.lo[j] = lp.lower[j] / P.cscale[j];
    P.hi[j] = lp.upper[j] / P.cscale[j];
  }
  P.b.assign(P.m, 0.0);
  for (int i = 0; i < P.m; ++i) {
    P.b[i] = lp.rows[i].rhs * P.rscale[i];
    int s = P.n + i;
    switch (lp.rows[i].rel) {
      case Relation::LessEq:
        P.lo[s] = 0.0;
        P.hi[s] = kInf;
        break;
      case Relation::GreaterEq:
        P.lo[s] = -kInf;
        P.hi[s] = 0.0;
        break;
      case Relation::Equal:
        P.lo[s] = 0.0;
        P.hi[s] = 0.0;
        break;
    }
  }

  P.cols.resize(P.N);
  for (int j = 0; j < P.N; ++j) {
    for (int e = P.col_start[j]; e < P.col_start[j + 1]; ++e)
      P.cols[j].push_back({P.col_row[e], P.col_val[e]});
  }
  return P;
}

class Simplex {
 public:
  Simplex(const Prepared& prep, const LpOptions& options) : P(prep), opt(options) {}

  LpStatus run();

  std::vector<double> xval;      // scaled values, all N variables
  std::vector<double> duals;     // scaled duals, original-row indexed
  std::vector<double> redcost;   // scaled reduced costs, all N variables
  std::vector<double> farkas_y;  // scaled phase-1 duals on infeasibility
  long iters = 0;
  std::vector<unsigned char> vstat;

 private:
  const Prepared& P;
  LpOptions opt;
  std::vector<int> basic;   // position -> variable
  std::vector<int> pos_of;  // variable -> position or -1
  BasisFactor factor;
  int phase = 1;
  long degen_streak = 0;
  bool bland = false;
  std::vector<double> ybuf, wbuf, cb;

  double col_dot(int j, const std::vector<double>& y) const {
    double acc = 0.0;
    for (int e = P.col_start[j]; e < P.col_start[j + 1]; ++e) acc += P.col_val[e] * y[P.col_row[e]];
    return acc;
  }
  int sigma(int var) const {
    double x = xval[var];
    if (x < P.lo[var] - opt.feas_tol) return -1;
    if (x > P.hi[var] + opt.feas_tol) return 1;
    return 0;
  }
  double infeasibility() const {
    double total = 0.0;
    for (int pos = 0; pos < P.m; ++pos) {
      int v = basic[pos];
      total += std::max({P.lo[v] - xval[v], xval[v] - P.hi[v], 0.0});
    }
    return total;
  }
  void park_nonbasic(int j, unsigned char want);
  bool adopt_warm(const std::vector<unsigned char>& ws);
  bool refactor() {
    std::vector<const SparseColumn*> cols(P.m);
    for (int pos = 0; pos < P.m; ++pos) cols[pos] = &P.cols[basic[pos]];
    return factor.factor(P.m, cols);
  }
  void compute_basics() {
    std::vector<double> r = P.b;
    for (int j = 0; j < P.N; ++j) {
      if (vstat[j] == kBasic || xval[j] == 0.0) continue;
      for (int e = P.col_start[j]; e < P.col_start[j + 1]; ++e) r[P.col_row[e]] -= P.col_val[e] * xval[j];
    }
    factor.ftran(r);
    for (int pos = 0; pos < P.m; ++pos) xval[basic[pos]] = r[pos];
  }
};

// Place a nonbasic variable on its preferred bound, falling back to whichever
// side is finite.
void Simplex::park_nonbasic(int j, unsigned char want) {
  if (want == kAtUpper && std::isfinite(P.hi[j])) {
    vstat[j] = kAtUpper;
    xval[j] = P.hi[j];
  } else if (std::isfinite(P.lo[j])) {
    vstat[j] = kAtLower;
    xval[j] = P.lo[j];
  } else if (std::isfinite(P.hi[j])) {
    vstat[j] = kAtUpper;
    xval[j] = P.hi[j];
  } else {
    vstat[j] = kFreeNB;
    xval[j] = 0.0;
  }
}

// Resume from a caller-provided basis. The basis matrix depends only on the
// rows, so a status vector from a solve that differed only in bounds always
// factorizes; bound changes show up as (composite phase 1) infeasibilities.
bool Simplex::adopt_warm(const std::vector<unsigned char>& ws) {
  int count = 0;
  for (unsigned char s : ws)
    if (s == kBasic) ++count;
  if (count != P.m) return false;
  vstat.assign(P.N, kAtLower);
  xval.assign(P.N, 0.0);
  pos_of.assign(P.N, -1);
  int pos = 0;
  for (int j = 0; j < P.N; ++j) {
    if (ws[j] == kBasic) {
      basic[pos] = j;
      vstat[j] = kBasic;
      pos_of[j] = pos;
      ++pos;
    } else {
      park_nonbasic(j, ws[j]);
    }
  }
  return refactor();
}

LpStatus Simplex::run() {
  xval.assign(P.N, 0.0);
  pos_of.assign(P.N, -1);
  basic.resize(P.m);
  bool warm = opt.warm_start && static_cast<int>(opt.warm_start->size()) == P.N &&
              adopt_warm(*opt.warm_start);
  if (!warm) {
    // All-slack basis, structurals at their nearest finite bound.
    vstat.assign(P.N, kAtLower);
    xval.assign(P.N, 0.0);
    pos_of.assign(P.N, -1);
    for (int j = 0; j < P.n; ++j) park_nonbasic(j, kAtLower);
    for (int i = 0; i < P.m; ++i) {
      basic[i] = P.n + i;
      vstat[P.n + i] = kBasic;
      pos_of[P.n + i] = i;
    }
    if (!refactor()) return LpStatus::NumericalFailure;
  }
  compute_basics();

  const long max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50L * (P.m + P.N) + 10000;
  const double dtol = opt.opt_tol;
  phase = 1;
  ybuf.resize(P.m);
  cb.resize(P.m);

  while (iters < max_iter) {
    if (factor.eta_count() >= kRefactorEvery) {
      if (!refactor()) return LpStatus::NumericalFailure;
      compute_basics();
    }
    double infeas = infeasibility();
    if (phase == 1 && infeas <= opt.feas_tol) phase = 2;
    else if (phase == 2 && infeas > 10 * opt.feas_tol) phase = 1;

    for (int pos = 0; pos < P.m; ++pos)
      cb[pos] = phase == 1 ? static_cast<double>(sigma(basic[pos])) : P.cost[basic[pos]];
    ybuf = cb;
    factor.btran(ybuf);

    // Pricing: Dantzig largest |d|, or Bland lowest index.
    int q = -1, dirq = 0;
    double best = 0.0;
    for (int j = 0; j < P.N; ++j) {
      if (vstat[j] == kBasic || P.lo[j] == P.hi[j]) continue;
      double d = (phase == 1 ? 0.0 : P.cost[j]) - col_dot(j, ybuf);
      int dir = 0;
      if (vstat[j] == kAtLower && d < -dtol) dir = 1;
      else if (vstat[j] == kAtUpper && d > dtol) dir = -1;
      else if (vstat[j] == kFreeNB && std::abs(d) > dtol) dir = d < 0 ? 1 : -1;
      if (dir == 0) continue;
      if (bland) {
        q = j;
        dirq = dir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dirq = dir;
      }
    }

    if (q < 0) {
      // Confirm any terminal verdict on a fresh factorization.
      if (factor.eta_count() > 0) {
        if (!refactor()) return LpStatus::NumericalFailure;
        compute_basics();
        continue;
      }
      double residual = infeasibility();
      if (residual > opt.feas_tol) {
        if (phase == 2) {
          phase = 1;
          continue;
        }
        farkas_y = ybuf;
        return LpStatus::Infeasible;
      }
      if (phase == 1) {
        phase = 2;
        continue;
      }
      duals = ybuf;
      redcost.assign(P.N, 0.0);
      for (int j = 0; j < P.N; ++j)
        if (vstat[j] != kBasic) redcost[j] = P.cost[j] - col_dot(j, ybuf);
      return LpStatus::Optimal;
    }

    wbuf.assign(P.m, 0.0);
    for (int e = P.col_start[q]; e < P.col_start[q + 1]; ++e) wbuf[P.col_row[e]] = P.col_val[e];
    factor.ftran(wbuf);

    // Ratio test: first blocking event among basics, or the entering
    // variable's own bound-to-bound span.
    double span = P.hi[q] - P.lo[q];  // may be +inf
    double block_t = kInf;
    int leave_pos = -1;
    bool leave_at_upper = false;
    double leave_w = 0.0;
    for (int pos = 0; pos < P.m; ++pos) {
      double wv = wbuf[pos];
      if (std::abs(wv) <= kPivTol) continue;
      int bv = basic[pos];
      double delta = -dirq * wv;
      double x = xval[bv], l = P.lo[bv], h = P.hi[bv];
      double t;
      bool to_upper;
      if (phase == 1 && x < l - opt.feas_tol) {
        if (delta <= 0) continue;  // drifts further below; slope already priced
        t = (l - x) / delta;
        to_upper = false;
      } else if (phase == 1 && x > h + opt.feas_tol) {
        if (delta >= 0) continue;
        t = (h - x) / delta;
        to_upper = true;
      } else if (delta > 0) {
        if (!std::isfinite(h)) continue;
        t = (h - x) / delta;
        to_upper = true;
      } else {
        if (!std::isfinite(l)) continue;
        t = (l - x) / delta;
        to_upper = false;
      }
      if (t < 0) t = 0;
      bool take;
      if (leave_pos < 0) {
        take = true;
      } else if (bland) {
        take = t < block_t - 1e-12 || (t <= block_t + 1e-12 && bv < basic[leave_pos]);
      } else {
        double eps = 1e-9 * (1 + block_t);
        take = t < block_t - eps ||
               (t <= block_t + eps &&
                (std::abs(wv) > std::abs(leave_w) ||
                 (std::abs(wv) == std::abs(leave_w) && bv < basic[leave_pos])));
      }
      if (take) {
        block_t = std::min(block_t, t);
        leave_pos = pos;
        leave_at_upper = to_upper;
        leave_w = wv;
      }
    }

    double theta;
    bool do_flip;
    if (std::isfinite(span) && span <= block_t) {
      theta = span;
      do_flip = true;
    } else if (leave_pos >= 0) {
      theta = block_t;
      do_flip = false;
    } else {
      // No event: unbounded in phase 2; numerically stuck in phase 1.
      return phase == 2 ? LpStatus::Unbounded : LpStatus::NumericalFailure;
    }

    for (int pos = 0; pos < P.m; ++pos) xval[basic[pos]] -= dirq * theta * wbuf[pos];
    if (do_flip) {
      xval[q] = vstat[q] == kAtLower ? P.hi[q] : P.lo[q];
      vstat[q] = vstat[q] == kAtLower ? kAtUpper : kAtLower;
    } else {
      int lv = basic[leave_pos];
      xval[q] = xval[q] + dirq * theta;
      xval[lv] = leave_at_upper ? P.hi[lv] : P.lo[lv];
      vstat[lv] = leave_at_upper ? kAtUpper : kAtLower;
      pos_of[lv] = -1;
      basic[leave_pos] = q;
      vstat[q] = kBasic;
      pos_of[q] = leave_pos;
      if (!factor.update(wbuf, leave_pos)) {
        if (!refactor()) return LpStatus::NumericalFailure;
        compute_basics();
      }
    }
    ++iters;
    if (theta <= kDegenTheta) {
      if (++degen_streak >= kBlandTrigger) bland = true;
    } else {
      degen_streak = 0;
      bland = false;
    }
  }
  return LpStatus::IterationLimit;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  lp.validate();
  Prepared P = prepare(lp, options);
  Simplex sim(P, options);
  LpSolution out;
  out.status = sim.run();
  out.iterations = sim.iters;
  const int n = P.n, m = P.m;

  if (out.status == LpStatus::Optimal) {
    out.x.resize(n);
    for (int j = 0; j < n; ++j) out.x[j] = sim.xval[j] * P.cscale[j];
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.objective[j] * out.x[j];
    out.objective = obj;
    out.duals.resize(m);
    for (int i = 0; i < m; ++i) out.duals[i] = P.flip * P.rscale[i] * sim.duals[i];
    out.reduced_costs.resize(n);
    for (int j = 0; j < n; ++j) out.reduced_costs[j] = P.flip * sim.redcost[j] / P.cscale[j];
    out.basis_status = sim.vstat;
  } else if (out.status == LpStatus::Infeasible) {
    FarkasCertificate& fc = out.farkas;
    fc.row_multipliers.resize(m);
    double ymax = 0.0;
    for (int i = 0; i < m; ++i) {
      fc.row_multipliers[i] = P.rscale[i] * sim.farkas_y[i];
      ymax = std::max(ymax, std::abs(fc.row_multipliers[i]));
    }
    // Drop tolerance-zero multipliers: a tiny entry times an infinite row
    // range would blow the interval up; the cleaned vector is simply a
    // different candidate certificate, still checked honestly by verify().
    for (int i = 0; i < m; ++i)
      if (std::abs(fc.row_multipliers[i]) < 1e-11 * ymax) fc.row_multipliers[i] = 0.0;
    std::vector<double> v(n, 0.0);
    for (int i = 0; i < m; ++i)
      for (const LinearTerm& t : lp.rows[i].terms) v[t.var] += fc.row_multipliers[i] * t.coeff;
    fc.combo_min = 0.0;
    fc.combo_max = 0.0;
    for (int j = 0; j < n; ++j) {
      if (v[j] == 0.0) continue;
      double at_lo = v[j] * lp.lower[j], at_hi = v[j] * lp.upper[j];
      fc.combo_min += std::min(at_lo, at_hi);
      fc.combo_max += std::max(at_lo, at_hi);
    }
    fc.required_min = 0.0;
    fc.required_max = 0.0;
    for (int i = 0; i < m; ++i) {
      double y = fc.row_multipliers[i];
      if (y == 0.0) continue;
      double rlo = lp.rows[i].rel == Relation::LessEq ? -kInf : lp.rows[i].rhs;
      double rhi = lp.rows[i].rel == Relation::GreaterEq ? kInf : lp.rows[i].rhs;
      double at_lo = y * rlo, at_hi = y * rhi;
      fc.required_min += std::min(at_lo, at_hi);
      fc.required_max += std::max(at_lo, at_hi);
    }
  } else if (out.status == LpStatus::Unbounded) {
    out.objective = lp.sense == LinearProgram::Sense::Maximize ? kInf : -kInf;
  }
  return out;
}

}  // namespace stackheat::milp
