#include "stackheat/reform.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

namespace stackheat::reform {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using bilevel::BilevelProblem;
using bilevel::LinearConstraint;
using bilevel::Owner;
using bilevel::VarRef;
using milp::LinearTerm;
using milp::Relation;

// Range of sum(a_j * x_j) over the variables' provable ranges.
std::pair<double, double> activity_range(const std::vector<LinearTerm>& terms,
                                         const std::vector<VarRef>& vars) {
  double lo = 0.0, hi = 0.0;
  for (const LinearTerm& t : terms) {
    if (t.coeff == 0.0) continue;
    const double a = t.coeff * vars[t.var].eff_lo();
    const double b = t.coeff * vars[t.var].eff_hi();
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

double eval_terms(const std::vector<LinearTerm>& terms, const std::vector<double>& x) {
  double s = 0.0;
  for (const LinearTerm& t : terms) s += t.coeff * x[t.var];
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

double KktResiduals::max_all() const {
  return std::max(std::max(stationarity, primal), std::max(dual_sign, complementarity));
}

KktSystem follower_kkt(const BilevelProblem& bp) {
  const std::vector<VarRef>& vars = bp.vars;
  KktSystem kkt;
  kkt.first_dual_id = static_cast<int>(vars.size());
  int next = kkt.first_dual_id;

  // Objective gradient pieces per follower variable: a numeric part and the
  // symbolic price terms from the bilinear products.
  std::vector<double> lin(vars.size(), 0.0);
  std::vector<std::vector<LinearTerm>> price(vars.size());
  for (const LinearTerm& t : bp.follower_objective.linear) lin[t.var] += t.coeff;
  for (const bilevel::BilinearTerm& b : bp.follower_objective.bilinear) {
    if (vars[b.price_var].owner != Owner::Leader || vars[b.var].owner != Owner::Follower)
      throw ReformulationError("nonlinear follower objective term on '" + vars[b.var].name +
                               "' (price side must be a leader price variable)");
    price[b.var].push_back({b.price_var, b.coeff});
  }

  // Fallback dual-magnitude estimate from the objective coefficients.
  double hobj = 0.0;
  for (const LinearTerm& t : bp.follower_objective.linear)
    hobj = std::max(hobj, std::abs(t.coeff));
  for (const bilevel::BilinearTerm& b : bp.follower_objective.bilinear) {
    const VarRef& p = vars[b.price_var];
    const double mag = std::max(std::abs(p.lower), std::abs(p.upper));
    if (std::isfinite(mag)) hobj = std::max(hobj, std::abs(b.coeff) * mag);
  }
  hobj = std::max(hobj, 1e-3);

  // Stationarity accumulators: dual-variable terms per follower primal.
  std::vector<std::vector<LinearTerm>> stat(vars.size());

  // One dual per follower row; inequalities also get a complementarity pair.
  for (std::size_t r = 0; r < bp.follower_constraints.size(); ++r) {
    const LinearConstraint& row = bp.follower_constraints[r];
    const bool eq = row.rel == Relation::Equal;
    VarRef mu;
    mu.id = next++;
    mu.name = "mu[" + std::to_string(r) + "]:" + row.tag;
    mu.lower = eq ? -kInf : 0.0;
    mu.upper = kInf;
    mu.owner = Owner::Dual;
    kkt.dual_vars.push_back(mu);

    const double sign = row.rel == Relation::GreaterEq ? -1.0 : 1.0;
    for (const LinearTerm& t : row.terms) stat[t.var].push_back({mu.id, sign * t.coeff});

    if (!eq) {
      const auto [alo, ahi] = activity_range(row.terms, vars);
      ComplementarityPair pair;
      pair.dual_var = mu.id;
      if (row.rel == Relation::LessEq) {
        for (const LinearTerm& t : row.terms) pair.slack_terms.push_back({t.var, -t.coeff});
        pair.slack_const = row.rhs;
        pair.slack_width = row.rhs - alo;
      } else {
        pair.slack_terms = row.terms;
        pair.slack_const = -row.rhs;
        pair.slack_width = ahi - row.rhs;
      }
      pair.slack_width = std::max(pair.slack_width, 0.0);
      pair.dual_hint = hobj;
      pair.label = "row(" + row.tag + ")#" + std::to_string(r);
      kkt.pairs.push_back(std::move(pair));
    }
  }

  // Bound duals. A fixed variable gets a single free dual and no pair; a
  // finite lower or upper bound each get a signed dual plus a pair.
  for (const VarRef& v : vars) {
    if (v.owner != Owner::Follower) continue;
    if (v.lower == v.upper) {
      VarRef phi;
      phi.id = next++;
      phi.name = "phi(" + v.name + ")";
      phi.lower = -kInf;
      phi.upper = kInf;
      phi.owner = Owner::Dual;
      kkt.dual_vars.push_back(phi);
      stat[v.id].push_back({phi.id, 1.0});
      continue;
    }
    const double hint = v.dual_hint > 0.0 ? v.dual_hint : hobj;
    if (std::isfinite(v.lower)) {
      VarRef nu;
      nu.id = next++;
      nu.name = "nu.lo(" + v.name + ")";
      nu.lower = 0.0;
      nu.upper = kInf;
      nu.owner = Owner::Dual;
      kkt.dual_vars.push_back(nu);
      stat[v.id].push_back({nu.id, -1.0});
      ComplementarityPair pair;
      pair.dual_var = nu.id;
      pair.slack_terms = {{v.id, 1.0}};
      pair.slack_const = -v.lower;
      pair.slack_width = std::max(v.eff_hi() - v.lower, 0.0);
      pair.dual_hint = hint;
      pair.label = "lo(" + v.name + ")";
      kkt.pairs.push_back(std::move(pair));
    }
    if (std::isfinite(v.upper)) {
      VarRef nu;
      nu.id = next++;
      nu.name = "nu.up(" + v.name + ")";
      nu.lower = 0.0;
      nu.upper = kInf;
      nu.owner = Owner::Dual;
      kkt.dual_vars.push_back(nu);
      stat[v.id].push_back({nu.id, 1.0});
      ComplementarityPair pair;
      pair.dual_var = nu.id;
      pair.slack_terms = {{v.id, -1.0}};
      pair.slack_const = v.upper;
      pair.slack_width = std::max(v.upper - v.eff_lo(), 0.0);
      pair.dual_hint = hint;
      pair.label = "up(" + v.name + ")";
      kkt.pairs.push_back(std::move(pair));
    }
  }

  // Stationarity: gradient + A^T mu - nu_lo + nu_up = 0 per follower primal.
  for (const VarRef& v : vars) {
    if (v.owner != Owner::Follower) continue;
    LinearConstraint row;
    row.terms = price[v.id];
    row.terms.insert(row.terms.end(), stat[v.id].begin(), stat[v.id].end());
    row.rel = Relation::Equal;
    row.rhs = -lin[v.id];
    row.tag = "kkt-stationarity:" + v.name;
    kkt.stationarity.push_back(std::move(row));
  }
  return kkt;
}

BigMRows big_m_complementarity(const KktSystem& kkt, double big_m_value, int first_free_id) {
  BigMRows out;
  int next = first_free_id;
  for (const ComplementarityPair& pair : kkt.pairs) {
    VarRef u;
    u.id = next++;
    u.name = "u." + pair.label;
    u.lower = 0.0;
    u.upper = 1.0;
    u.integral = true;
    u.owner = Owner::Auxiliary;
    out.binaries.push_back(u);

    double m_dual, m_slack;
    if (big_m_value > 0.0) {
      m_dual = big_m_value;
      m_slack = big_m_value;
      if (!std::isfinite(pair.slack_width))
        out.warnings.push_back("slack bound for " + pair.label +
                               " is unbounded; fixed big-m may cut solutions off");
      else if (big_m_value < pair.slack_width - 1e-12)
        out.warnings.push_back("big-m " + fmt(big_m_value) + " below provable slack bound " +
                               fmt(pair.slack_width) + " for " + pair.label);
    } else {
      if (!std::isfinite(pair.slack_width))
        throw ReformulationError("complementarity slack unbounded for " + pair.label);
      m_dual = 10.0 * std::max(pair.dual_hint, 1e-3);
      m_slack = pair.slack_width + 1e-7 * (1.0 + pair.slack_width);
    }

    LinearConstraint dual_row;
    dual_row.terms = {{pair.dual_var, 1.0}, {u.id, -m_dual}};
    dual_row.rel = Relation::LessEq;
    dual_row.rhs = 0.0;
    dual_row.tag = "big-m-dual";
    out.rows.push_back(std::move(dual_row));

    LinearConstraint slack_row;
    slack_row.terms = pair.slack_terms;
    slack_row.terms.push_back({u.id, m_slack});
    slack_row.rel = Relation::LessEq;
    slack_row.rhs = m_slack - pair.slack_const;
    slack_row.tag = "big-m-slack";
    out.rows.push_back(std::move(slack_row));
  }
  return out;
}

ProductRows linearize_products(const std::vector<bilevel::BilinearTerm>& products,
                               const std::vector<bilevel::TierGroup>& groups,
                               const std::vector<VarRef>& vars, int first_free_id) {
  std::unordered_map<int, const bilevel::TierGroup*> by_kappa;
  for (const bilevel::TierGroup& g : groups) by_kappa[g.kappa_var] = &g;

  ProductRows out;
  int next = first_free_id;
  for (const bilevel::BilinearTerm& b : products) {
    const auto it = by_kappa.find(b.price_var);
    if (it == by_kappa.end())
      throw ReformulationError("price variable '" + vars[b.price_var].name +
                               "' has no tier group");
    const bilevel::TierGroup& g = *it->second;
    const double ymax = std::max(vars[b.var].eff_hi(), 0.0);
    if (!std::isfinite(ymax))
      throw ReformulationError("cannot linearize price product on unbounded '" +
                               vars[b.var].name + "'");
    for (std::size_t j = 0; j < g.z_vars.size(); ++j) {
      VarRef w;
      w.id = next++;
      w.name = "w." + vars[b.price_var].name + "." + vars[b.var].name + "[" + std::to_string(j) +
               "]";
      w.lower = 0.0;
      w.upper = ymax;
      w.owner = Owner::Auxiliary;
      out.aux.push_back(w);

      out.rows.push_back(
          {{{w.id, 1.0}, {g.z_vars[j], -ymax}}, Relation::LessEq, 0.0, "product-cap"});
      out.rows.push_back(
          {{{w.id, 1.0}, {b.var, -1.0}}, Relation::LessEq, 0.0, "product-below-load"});
      out.rows.push_back({{{b.var, 1.0}, {w.id, -1.0}, {g.z_vars[j], ymax}},
                          Relation::LessEq,
                          ymax,
                          "product-activation"});
      out.revenue_linear.push_back({w.id, b.coeff * g.grid[j]});
    }
  }
  return out;
}

PwlExpansion pwl_expand(const bilevel::QuadCost& q, int n_segments, int first_free_id) {
  if (n_segments < 1) throw std::invalid_argument("pwl segment count must be at least 1");
  if (q.a < -1e-15) throw ReformulationError("non-convex quadratic '" + q.name + "'");
  if (!(std::isfinite(q.arg_lo) && std::isfinite(q.arg_hi)) || q.arg_lo > q.arg_hi)
    throw ReformulationError("unbounded or empty domain for '" + q.name + "'");

  double lo = q.arg_lo, hi = q.arg_hi;
  // A frozen argument still gets a 2-point curve; the link row pins the
  // weights back onto the real domain.
  if (hi - lo < 1e-12) hi = lo + 1.0;

  PwlExpansion out;
  const int n = n_segments;
  const double width = (hi - lo) / n;
  out.curve.x.resize(n + 1);
  out.curve.f.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * (static_cast<double>(i) / n);
    out.curve.x[i] = x;
    out.curve.f[i] = q.a * x * x + q.b * x + q.c;
  }
  out.curve.convex = true;
  out.curve.max_gap = std::max(q.a, 0.0) * width * width / 4.0;

  int next = first_free_id;
  LinearConstraint hull, link;
  for (int i = 0; i <= n; ++i) {
    VarRef w;
    w.id = next++;
    w.name = q.name + ".lam[" + std::to_string(i) + "]";
    w.lower = 0.0;
    w.upper = 1.0;
    w.owner = Owner::Auxiliary;
    out.weights.push_back(w);
    hull.terms.push_back({w.id, 1.0});
    link.terms.push_back({w.id, out.curve.x[i]});
    out.cost_terms.push_back({w.id, q.scale * out.curve.f[i]});
  }
  hull.rel = Relation::Equal;
  hull.rhs = 1.0;
  hull.tag = "pwl-hull";
  for (const LinearTerm& t : q.arg) link.terms.push_back({t.var, -t.coeff});
  link.rel = Relation::Equal;
  link.rhs = 0.0;
  link.tag = "pwl-arg";
  out.rows.push_back(std::move(hull));
  out.rows.push_back(std::move(link));
  return out;
}

std::vector<int> append_quadratic_pwl(milp::LinearProgram& lp, const bilevel::QuadCost& q,
                                      int n_segments, double obj_sign) {
  const PwlExpansion ex = pwl_expand(q, n_segments, lp.num_vars());
  std::vector<int> ids;
  for (std::size_t i = 0; i < ex.weights.size(); ++i)
    ids.push_back(lp.add_var(0.0, 1.0, obj_sign * ex.cost_terms[i].coeff));
  for (const LinearConstraint& row : ex.rows) lp.add_row(row.terms, row.rel, row.rhs);
  return ids;
}

Reformulation to_milp(const BilevelProblem& bp, const ReformOptions& opt) {
  if (opt.n_segments < 1) throw std::invalid_argument("pwl segment count must be at least 1");
  bp.validate();

  Reformulation R;
  R.kkt = follower_kkt(bp);
  R.first_dual_id = R.kkt.first_dual_id;
  int next = R.first_dual_id + static_cast<int>(R.kkt.dual_vars.size());

  R.first_binary_id = next;
  BigMRows bm = big_m_complementarity(R.kkt, opt.big_m, next);
  next += static_cast<int>(bm.binaries.size());
  R.warnings = bm.warnings;

  R.first_product_id = next;
  std::vector<bilevel::TierGroup> groups = bp.index.tiers_e;
  groups.insert(groups.end(), bp.index.tiers_h.begin(), bp.index.tiers_h.end());
  ProductRows pr =
      linearize_products(bp.leader_objective.revenue, groups, bp.vars, next);
  next += static_cast<int>(pr.aux.size());
  R.first_fuel_id = next;

  MilpProblem& P = R.milp;
  P.lp.sense = milp::LinearProgram::Sense::Maximize;
  auto push_var = [&](const VarRef& v) {
    const int id = P.lp.add_var(v.lower, v.upper, 0.0);
    assert(id == v.id);
    (void)id;
    P.var_names.push_back(v.name);
    if (v.integral) P.integer_vars.push_back(v.id);
  };
  for (const VarRef& v : bp.vars) push_var(v);
  for (const VarRef& v : R.kkt.dual_vars) push_var(v);
  for (const VarRef& v : bm.binaries) push_var(v);
  for (const VarRef& v : pr.aux) push_var(v);

  std::vector<LinearConstraint> fuel_rows;
  std::vector<LinearTerm> fuel_cost;
  for (const bilevel::QuadCost& q : bp.leader_objective.fuel) {
    PwlExpansion ex = pwl_expand(q, opt.n_segments, P.lp.num_vars());
    for (const VarRef& v : ex.weights) push_var(v);
    fuel_rows.insert(fuel_rows.end(), ex.rows.begin(), ex.rows.end());
    fuel_cost.insert(fuel_cost.end(), ex.cost_terms.begin(), ex.cost_terms.end());
  }

  for (const LinearTerm& t : bp.leader_objective.linear) P.lp.objective[t.var] += t.coeff;
  for (const LinearTerm& t : pr.revenue_linear) P.lp.objective[t.var] += t.coeff;
  for (const LinearTerm& t : fuel_cost) P.lp.objective[t.var] -= t.coeff;

  auto push_rows = [&](const std::vector<LinearConstraint>& rows) {
    for (const LinearConstraint& row : rows) {
      P.lp.add_row(row.terms, row.rel, row.rhs);
      P.row_tags.push_back(row.tag);
    }
  };
  push_rows(bp.leader_constraints);
  push_rows(bp.follower_constraints);
  push_rows(R.kkt.stationarity);
  push_rows(bm.rows);
  push_rows(pr.rows);
  push_rows(fuel_rows);

  P.lp.validate();
  return R;
}

KktResiduals kkt_residuals(const std::vector<double>& x, const KktSystem& kkt,
                           const BilevelProblem& bp) {
  const std::size_t need = static_cast<std::size_t>(kkt.first_dual_id) + kkt.dual_vars.size();
  if (x.size() < need)
    throw std::invalid_argument("assignment does not cover the KKT dual variables");

  KktResiduals res;
  for (const LinearConstraint& row : kkt.stationarity)
    res.stationarity = std::max(res.stationarity, std::abs(eval_terms(row.terms, x) - row.rhs));

  for (const LinearConstraint& row : bp.follower_constraints) {
    const double a = eval_terms(row.terms, x);
    double v = 0.0;
    if (row.rel == Relation::Equal)
      v = std::abs(a - row.rhs);
    else if (row.rel == Relation::LessEq)
      v = std::max(0.0, a - row.rhs);
    else
      v = std::max(0.0, row.rhs - a);
    res.primal = std::max(res.primal, v);
  }
  for (const VarRef& v : bp.vars) {
    if (v.owner != Owner::Follower) continue;
    if (std::isfinite(v.lower)) res.primal = std::max(res.primal, v.lower - x[v.id]);
    if (std::isfinite(v.upper)) res.primal = std::max(res.primal, x[v.id] - v.upper);
  }

  for (const VarRef& v : kkt.dual_vars)
    if (v.lower == 0.0) res.dual_sign = std::max(res.dual_sign, -x[v.id]);

  for (const ComplementarityPair& pair : kkt.pairs) {
    const double slack = pair.slack_const + eval_terms(pair.slack_terms, x);
    res.complementarity =
        std::max(res.complementarity, std::abs(x[pair.dual_var] * slack));
  }
  return res;
}

std::string to_lp_text(const MilpProblem& p) {
  const milp::LinearProgram& lp = p.lp;
  auto name = [&](int j) {
    if (j < static_cast<int>(p.var_names.size()) && !p.var_names[j].empty())
      return p.var_names[j];
    return "x" + std::to_string(j);
  };

  std::string s;
  s += lp.sense == milp::LinearProgram::Sense::Maximize ? "Maximize\n obj:" : "Minimize\n obj:";
  for (int j = 0; j < lp.num_vars(); ++j)
    if (lp.objective[j] != 0.0)
      s += (lp.objective[j] >= 0 ? " +" : " ") + fmt(lp.objective[j]) + " " + name(j);
  s += "\nSubject To\n";
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const milp::Row& row = lp.rows[r];
    s += " r" + std::to_string(r);
    if (r < p.row_tags.size() && !p.row_tags[r].empty()) s += " {" + p.row_tags[r] + "}";
    s += ":";
    for (const LinearTerm& t : row.terms)
      s += (t.coeff >= 0 ? " +" : " ") + fmt(t.coeff) + " " + name(t.var);
    s += row.rel == Relation::LessEq ? " <= " : row.rel == Relation::GreaterEq ? " >= " : " = ";
    s += fmt(row.rhs) + "\n";
  }
  s += "Bounds\n";
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    s += " ";
    if (lo == -kInf && hi == kInf) {
      s += name(j) + " free";
    } else {
      if (lo != -kInf) s += fmt(lo) + " <= ";
      s += name(j);
      if (hi != kInf) s += " <= " + fmt(hi);
    }
    s += "\n";
  }
  if (!p.integer_vars.empty()) {
    s += "Binaries\n";
    for (int j : p.integer_vars) s += " " + name(j) + "\n";
  }
  s += "End\n";
  return s;
}

}  // namespace stackheat::reform
