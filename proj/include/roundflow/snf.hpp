#pragma once

// Smith normal form over the integers, with the unimodular transforms and
// the lattice utilities (kernel, membership, linear solve) built on it.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <vector>

namespace roundflow {

using IMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct SmithForm {
  IMat d;  // u * input * v = d, diagonal
  IMat u, v;
  int rank = 0;
  std::vector<std::int64_t> invariant_factors;  // positive, divisibility order
};

inline SmithForm smith_normal_form(IMat a) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  SmithForm f;
  f.u = IMat::Identity(m, m);
  f.v = IMat::Identity(n, n);

  for (int t = 0; t < std::min(m, n); ++t) {
    // pivot: smallest nonzero |entry| in the trailing block
    int pr = -1, pc = -1;
    for (int i = t; i < m; ++i)
      for (int j = t; j < n; ++j)
        if (a(i, j) != 0 &&
            (pr < 0 || std::abs(a(i, j)) < std::abs(a(pr, pc)))) {
          pr = i;
          pc = j;
        }
    if (pr < 0) break;
    a.row(t).swap(a.row(pr));
    f.u.row(t).swap(f.u.row(pr));
    a.col(t).swap(a.col(pc));
    f.v.col(t).swap(f.v.col(pc));

    for (bool dirty = true; dirty;) {
      dirty = false;
      for (int i = t + 1; i < m; ++i) {
        while (a(i, t) != 0) {
          const std::int64_t q = a(i, t) / a(t, t);
          a.row(i) -= q * a.row(t);
          f.u.row(i) -= q * f.u.row(t);
          if (a(i, t) != 0) {  // remainder became the smaller pivot
            a.row(t).swap(a.row(i));
            f.u.row(t).swap(f.u.row(i));
          }
        }
      }
      for (int j = t + 1; j < n; ++j) {
        while (a(t, j) != 0) {
          const std::int64_t q = a(t, j) / a(t, t);
          a.col(j) -= q * a.col(t);
          f.v.col(j) -= q * f.v.col(t);
          if (a(t, j) != 0) {
            a.col(t).swap(a.col(j));
            f.v.col(t).swap(f.v.col(j));
            dirty = true;  // column swap may have refilled the pivot column
          }
        }
      }
    }

    // divisibility: fold any non-divisible trailing entry into the pivot row
    for (int i = t + 1; i < m; ++i)
      for (int j = t + 1; j < n; ++j)
        if (a(i, j) % a(t, t) != 0) {
          a.row(t) += a.row(i);
          f.u.row(t) += f.u.row(i);
          --t;  // redo this pivot
          i = m;
          break;
        }
  }

  for (int t = 0; t < std::min(m, n); ++t)
    if (a(t, t) < 0) {
      a.row(t) = -a.row(t);
      f.u.row(t) = -f.u.row(t);
    }
  f.d = a;
  for (int t = 0; t < std::min(m, n); ++t)
    if (a(t, t) != 0) {
      ++f.rank;
      f.invariant_factors.push_back(a(t, t));
    }
  return f;
}

// Basis (as columns) of the integer kernel of a.
inline IMat integer_kernel(const IMat& a) {
  const SmithForm f = smith_normal_form(a);
  const int n = static_cast<int>(a.cols());
  IMat k(n, n - f.rank);
  for (int j = f.rank; j < n; ++j) k.col(j - f.rank) = f.v.col(j);
  return k;
}

// One solution of a x = b over the integers, if any exists.
inline std::optional<IVec> integer_solve(const IMat& a, const IVec& b) {
  const SmithForm f = smith_normal_form(a);
  const IVec y = f.u * b;
  IVec z = IVec::Zero(a.cols());
  for (int k = 0; k < static_cast<int>(a.rows()); ++k) {
    if (k < f.rank) {
      if (y(k) % f.d(k, k) != 0) return std::nullopt;
      z(k) = y(k) / f.d(k, k);
    } else if (y(k) != 0) {
      return std::nullopt;
    }
  }
  return IVec(f.v * z);
}

// Does x lie in the lattice spanned by the columns of l?
inline bool lattice_contains(const IMat& l, const IVec& x) {
  if (l.cols() == 0) return x.isZero();
  return integer_solve(l, x).has_value();
}

// Is every column of a inside the column lattice of b?
inline bool lattice_subset(const IMat& a, const IMat& b) {
  for (int j = 0; j < a.cols(); ++j)
    if (!lattice_contains(b, IVec(a.col(j)))) return false;
  return true;
}

}  // namespace roundflow
