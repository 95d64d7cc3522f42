#pragma once

// Orthogonal Procrustes: the O(3) matrix best aligning paired point sets.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>
#include <vector>

#include "roundflow/sphere_grid.hpp"

namespace roundflow {

struct ProcrustesFit {
  Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
  double residual_sup = 0.0;  // max_k |q a_k - b_k|
};

// Minimize sum_k |q a_k - b_k|^2 over q in O(3) (no determinant
// constraint; reflections allowed).
inline ProcrustesFit procrustes_fit(const std::vector<Vec3>& a,
                                    const std::vector<Vec3>& b) {
  if (a.size() != b.size() || a.size() < 3)
    throw std::invalid_argument("procrustes_fit: need matched sets, >= 3");
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (size_t k = 0; k < a.size(); ++k) cov += b[k] * a[k].transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesFit fit;
  fit.q = svd.matrixU() * svd.matrixV().transpose();
  for (size_t k = 0; k < a.size(); ++k)
    fit.residual_sup =
        std::max(fit.residual_sup, (fit.q * a[k] - b[k]).norm());
  return fit;
}

inline double orthogonality_defect(const Eigen::Matrix3d& m) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity())
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace roundflow
