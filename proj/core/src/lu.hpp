#pragma once

#include <vector>

// Sparse LU factorization of a square basis matrix with partial pivoting
// (left-looking, Gilbert-Peierls sparse triangular solves), plus product-form
// eta updates so the simplex can replace one basis column without refactoring.
// Internal to the solver; not installed.

namespace stackheat::milp::detail {

struct SparseEntry {
  int idx;
  double val;
};

using SparseColumn = std::vector<SparseEntry>;

class BasisFactor {
 public:
  // Factors the m x m matrix whose k-th column is *cols[k]. Row indices in
  // the input are original row ids. Returns false when numerically singular.
  bool factor(int m, const std::vector<const SparseColumn*>& cols);

  // Solves B x = b. Input b is indexed by original row, output by basis
  // position (coefficient on basis column k lands in x[k]).
  void ftran(std::vector<double>& x) const;

  // Solves B^T y = c. Input c indexed by basis position, output y by
  // original row.
  void btran(std::vector<double>& y) const;

  // Product-form update after the column at basis position `pos` is replaced
  // by a column whose ftran image is `w` (dense, position-indexed). Returns
  // false when the pivot w[pos] is too small to be trusted.
  bool update(const std::vector<double>& w, int pos);

  int eta_count() const { return static_cast<int>(etas_.size()); }
  int dim() const { return m_; }

 private:
  int m_ = 0;
  // Factors of P B = L U, all indices in pivot-position space.
  std::vector<int> l_start_, l_idx_;
  std::vector<double> l_val_;
  std::vector<int> u_start_, u_idx_;
  std::vector<double> u_val_;
  std::vector<double> u_diag_;
  std::vector<int> perm_;  // perm_[position] = original row

  struct Eta {
    int pos;
    double pivot;
    std::vector<SparseEntry> col;  // off-pivot entries, position-indexed
  };
  std::vector<Eta> etas_;
};

}  // namespace stackheat::milp::detail
