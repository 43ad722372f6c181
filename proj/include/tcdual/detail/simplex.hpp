#pragma once

// Dense two-phase tableau simplex with Bland's rule, for the small linear
// programs of the brute-force oracles. Solves
//
//   maximize c.x  subject to  A x <= b,  x >= 0.

#include <cmath>
#include <limits>
#include <vector>

namespace tcdual::detail {

struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

class DenseSimplex {
 public:
  DenseSimplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b, const std::vector<double>& c,
               double eps = 1e-11)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        eps_(eps),
        basis_(static_cast<std::size_t>(m_)),
        nonbasis_(static_cast<std::size_t>(n_) + 1),
        t_(static_cast<std::size_t>(m_) + 2, std::vector<double>(static_cast<std::size_t>(n_) + 2, 0.0)) {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) at(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      basis_[static_cast<std::size_t>(i)] = n_ + i;
      at(i, n_) = -1.0;
      at(i, n_ + 1) = b[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n_; ++j) {
      nonbasis_[static_cast<std::size_t>(j)] = j;
      at(m_, j) = -c[static_cast<std::size_t>(j)];
    }
    nonbasis_[static_cast<std::size_t>(n_)] = -1;  // phase-one artificial
    at(m_ + 1, n_) = 1.0;
  }

  LpSolution solve() {
    LpSolution out;
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (at(i, n_ + 1) < at(r, n_ + 1)) r = i;
    if (m_ > 0 && at(r, n_ + 1) < -eps_) {
      pivot(r, n_);
      if (!run(true) || at(m_ + 1, n_ + 1) < -eps_) {
        out.status = LpSolution::Status::Infeasible;
        return out;
      }
      for (int i = 0; i < m_; ++i) {
        if (basis_[static_cast<std::size_t>(i)] != -1) continue;
        int s = -1;
        for (int j = 0; j <= n_; ++j) {
          if (s == -1 || at(i, j) < at(i, s) ||
              (at(i, j) == at(i, s) && nonbasis_[static_cast<std::size_t>(j)] < nonbasis_[static_cast<std::size_t>(s)]))
            s = j;
        }
        pivot(i, s);
      }
    }
    if (!run(false)) {
      out.status = LpSolution::Status::Unbounded;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    out.status = LpSolution::Status::Optimal;
    out.x.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const int v = basis_[static_cast<std::size_t>(i)];
      if (v >= 0 && v < n_) out.x[static_cast<std::size_t>(v)] = at(i, n_ + 1);
    }
    out.value = at(m_, n_ + 1);
    return out;
  }

 private:
  double& at(int i, int j) { return t_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

  void pivot(int r, int s) {
    const double inv = 1.0 / at(r, s);
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r) continue;
      const double f = at(i, s) * inv;
      if (f == 0.0) continue;
      for (int j = 0; j < n_ + 2; ++j)
        if (j != s) at(i, j) -= at(r, j) * f;
      at(i, s) = -f;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) at(r, j) *= inv;
    at(r, s) = inv;
    std::swap(basis_[static_cast<std::size_t>(r)], nonbasis_[static_cast<std::size_t>(s)]);
  }

  // Bland's rule: lowest-index improving column, lowest-index tied row.
  bool run(bool phase_one) {
    const int obj = phase_one ? m_ + 1 : m_;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        const int v = nonbasis_[static_cast<std::size_t>(j)];
        if (!phase_one && v == -1) continue;
        if (at(obj, j) < -eps_ && (s == -1 || v < nonbasis_[static_cast<std::size_t>(s)])) s = j;
      }
      if (s == -1) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (at(i, s) <= eps_) continue;
        if (r == -1) {
          r = i;
          continue;
        }
        const double lhs = at(i, n_ + 1) / at(i, s);
        const double rhs = at(r, n_ + 1) / at(r, s);
        if (lhs < rhs || (lhs == rhs && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }

  int m_;
  int n_;
  double eps_;
  std::vector<int> basis_;
  std::vector<int> nonbasis_;
  std::vector<std::vector<double>> t_;
};

}  // namespace tcdual::detail
