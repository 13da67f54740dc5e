#include "lu.hpp"

#include <cmath>
#include <cstdlib>

namespace stackheat::milp::detail {

namespace {
constexpr double kSingularTol = 1e-12;
constexpr double kEtaPivotAbs = 1e-10;
constexpr double kEtaPivotRel = 1e-7;
}  // namespace

bool BasisFactor::factor(int m, const std::vector<const SparseColumn*>& cols) {
  m_ = m;
  etas_.clear();
  l_start_.assign(1, 0);
  l_idx_.clear();
  l_val_.clear();
  u_start_.assign(1, 0);
  u_idx_.clear();
  u_val_.clear();
  u_diag_.assign(m, 0.0);
  perm_.assign(m, -1);
  if (static_cast<int>(cols.size()) != m) return false;

  // Working L columns, original-row indexed until the permutation is known.
  std::vector<SparseColumn> lcols(m);
  std::vector<int> pinv(m, -1);       // original row -> pivot position
  std::vector<double> work(m, 0.0);   // dense accumulator, original rows
  std::vector<char> in_work(m, 0);
  std::vector<char> mark(m, 0);       // DFS visited, positions
  std::vector<int> touched, finish, dfs_node, dfs_edge;
  touched.reserve(64);
  finish.reserve(64);

  for (int k = 0; k < m; ++k) {
    const SparseColumn& b = *cols[k];
    if (b.empty()) return false;
    touched.clear();
    finish.clear();

    for (const SparseEntry& e : b) {
      if (!in_work[e.idx]) {
        in_work[e.idx] = 1;
        work[e.idx] = e.val;
        touched.push_back(e.idx);
      } else {
        work[e.idx] += e.val;
      }
    }

    // Topological order (reverse DFS finish) of pivoted positions reachable
    // from the column pattern through the graph of L columns.
    for (const SparseEntry& e : b) {
      int start = pinv[e.idx];
      if (start < 0 || mark[start]) continue;
      dfs_node.clear();
      dfs_edge.clear();
      dfs_node.push_back(start);
      dfs_edge.push_back(0);
      mark[start] = 1;
      while (!dfs_node.empty()) {
        int p = dfs_node.back();
        const SparseColumn& lc = lcols[p];
        bool descended = false;
        while (dfs_edge.back() < static_cast<int>(lc.size())) {
          int child = pinv[lc[dfs_edge.back()].idx];
          ++dfs_edge.back();
          if (child >= 0 && !mark[child]) {
            mark[child] = 1;
            dfs_node.push_back(child);
            dfs_edge.push_back(0);
            descended = true;
            break;
          }
        }
        if (!descended) {
          finish.push_back(p);
          dfs_node.pop_back();
          dfs_edge.pop_back();
        }
      }
    }

    // Apply the reachable L columns, most recently finished first.
    for (auto it = finish.rbegin(); it != finish.rend(); ++it) {
      int p = *it;
      mark[p] = 0;
      double t = work[perm_[p]];
      if (t == 0.0) continue;
      for (const SparseEntry& e : lcols[p]) {
        if (!in_work[e.idx]) {
          in_work[e.idx] = 1;
          work[e.idx] = 0.0;
          touched.push_back(e.idx);
        }
        work[e.idx] -= e.val * t;
      }
    }

    // Partial pivot: largest remaining unpivoted entry.
    int piv_row = -1;
    double piv_abs = 0.0;
    for (int r : touched) {
      if (pinv[r] >= 0) continue;
      double a = std::abs(work[r]);
      if (a > piv_abs || (a == piv_abs && piv_row >= 0 && r < piv_row && a > 0.0)) {
        piv_abs = a;
        piv_row = r;
      }
    }
    if (piv_row < 0 || piv_abs <= kSingularTol) {
      for (int r : touched) {
        in_work[r] = 0;
        work[r] = 0.0;
      }
      return false;
    }
    double pivot = work[piv_row];
    pinv[piv_row] = k;
    perm_[k] = piv_row;
    u_diag_[k] = pivot;

    for (int r : touched) {
      double v = work[r];
      in_work[r] = 0;
      work[r] = 0.0;
      if (r == piv_row || v == 0.0) continue;
      int p = pinv[r];
      if (p >= 0) {
        u_idx_.push_back(p);
        u_val_.push_back(v);
      } else {
        lcols[k].push_back({r, v / pivot});
      }
    }
    u_start_.push_back(static_cast<int>(u_idx_.size()));
  }

  // Remap L to pivot-position space and freeze as CSC.
  for (int k = 0; k < m; ++k) {
    for (const SparseEntry& e : lcols[k]) {
      l_idx_.push_back(pinv[e.idx]);
      l_val_.push_back(e.val);
    }
    l_start_.push_back(static_cast<int>(l_idx_.size()));
  }
  return true;
}

void BasisFactor::ftran(std::vector<double>& x) const {
  // Permute b into position space.
  std::vector<double> z(m_);
  for (int k = 0; k < m_; ++k) z[k] = x[perm_[k]];
  // L z = Pb, forward column sweep.
  for (int k = 0; k < m_; ++k) {
    double t = z[k];
    if (t == 0.0) continue;
    for (int e = l_start_[k]; e < l_start_[k + 1]; ++e) z[l_idx_[e]] -= l_val_[e] * t;
  }
  // U x = z, backward column sweep.
  for (int k = m_ - 1; k >= 0; --k) {
    double t = z[k] / u_diag_[k];
    z[k] = t;
    if (t == 0.0) continue;
    for (int e = u_start_[k]; e < u_start_[k + 1]; ++e) z[u_idx_[e]] -= u_val_[e] * t;
  }
  x.swap(z);
  // Product-form updates, oldest first.
  for (const Eta& eta : etas_) {
    double t = x[eta.pos] / eta.pivot;
    x[eta.pos] = t;
    if (t == 0.0) continue;
    for (const SparseEntry& e : eta.col) x[e.idx] -= e.val * t;
  }
}

void BasisFactor::btran(std::vector<double>& y) const {
  // Transposed eta applications, newest first.
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = y[it->pos];
    for (const SparseEntry& e : it->col) acc -= e.val * y[e.idx];
    y[it->pos] = acc / it->pivot;
  }
  // U^T w = c, forward gather.
  std::vector<double> w(m_);
  for (int k = 0; k < m_; ++k) {
    double acc = y[k];
    for (int e = u_start_[k]; e < u_start_[k + 1]; ++e) acc -= u_val_[e] * w[u_idx_[e]];
    w[k] = acc / u_diag_[k];
  }
  // L^T v = w, backward gather.
  for (int k = m_ - 1; k >= 0; --k) {
    double acc = w[k];
    for (int e = l_start_[k]; e < l_start_[k + 1]; ++e) acc -= l_val_[e] * w[l_idx_[e]];
    w[k] = acc;
  }
  // y = P^T v back to original rows.
  for (int k = 0; k < m_; ++k) y[perm_[k]] = w[k];
}

bool BasisFactor::update(const std::vector<double>& w, int pos) {
  double pivot = w[pos];
  double wmax = 0.0;
  for (double v : w) wmax = std::max(wmax, std::abs(v));
  if (std::abs(pivot) < kEtaPivotAbs || std::abs(pivot) < kEtaPivotRel * wmax) return false;
  Eta eta;
  eta.pos = pos;
  eta.pivot = pivot;
  for (int i = 0; i < m_; ++i) {
    if (i != pos && std::abs(w[i]) > 1e-13) eta.col.push_back({i, w[i]});
  }
  etas_.push_back(std::move(eta));
  return true;
}

}  // namespace stackheat::milp::detail
