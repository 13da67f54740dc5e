#include "stackheat/milp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stackheat::milp {

int LinearProgram::add_var(double lo, double hi, double obj) {
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(obj);
  return num_vars() - 1;
}

void LinearProgram::add_row(std::vector<LinearTerm> terms, Relation rel, double rhs_value) {
  rows.push_back(Row{std::move(terms), rel, rhs_value});
}

void LinearProgram::validate() const {
  const size_t n = objective.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("lp: bound vectors do not match objective length");
  for (size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j]))
      throw std::invalid_argument("lp: objective coefficient " + std::to_string(j) + " not finite");
    if (std::isnan(lower[j]) || std::isnan(upper[j]))
      throw std::invalid_argument("lp: NaN bound on variable " + std::to_string(j));
    if (lower[j] > upper[j])
      throw std::invalid_argument("lp: lower > upper on variable " + std::to_string(j));
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].rhs))
      throw std::invalid_argument("lp: rhs of row " + std::to_string(i) + " not finite");
    for (const LinearTerm& t : rows[i].terms) {
      if (t.var < 0 || t.var >= static_cast<int>(n))
        throw std::invalid_argument("lp: row " + std::to_string(i) + " references variable " +
                                    std::to_string(t.var) + " out of range");
      if (!std::isfinite(t.coeff))
        throw std::invalid_argument("lp: row " + std::to_string(i) + " has non-finite coefficient");
    }
  }
}

bool FarkasCertificate::verify(double tol) const {
  if (row_multipliers.empty()) return false;
  return combo_max < required_min - tol || required_max < combo_min - tol;
}

}  // namespace stackheat::milp
