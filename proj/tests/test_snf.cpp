#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "roundflow/snf.hpp"

using namespace roundflow;

namespace {

Eigen::MatrixXd to_double(const IMat& a) {
  return a.cast<double>();
}

// rational (here: floating-point with full pivoting) nullspace dimension
int nullity_oracle(const IMat& a) {
  if (a.rows() == 0) return static_cast<int>(a.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(to_double(a));
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.dimensionOfKernel());
}

// exact unimodularity: square, full rank, all invariant factors 1
bool unimodular(const IMat& a) {
  if (a.rows() != a.cols()) return false;
  const SmithForm f = smith_normal_form(a);
  if (f.rank != a.rows()) return false;
  for (std::int64_t d : f.invariant_factors)
    if (d != 1) return false;
  return true;
}

}  // namespace

TEST_CASE("Smith form of fixed matrices") {
  IMat a(2, 2);
  a << 2, 4, -2, 6;
  const SmithForm f = smith_normal_form(a);
  REQUIRE(f.rank == 2);
  REQUIRE(f.invariant_factors == std::vector<std::int64_t>{2, 10});
  REQUIRE((f.u * a * f.v - f.d).isZero());

  IMat b(1, 1);
  b << 0;
  REQUIRE(smith_normal_form(b).rank == 0);

  IMat c(2, 3);
  c << 1, 0, 0, 0, 1, 0;
  REQUIRE(smith_normal_form(c).invariant_factors ==
          std::vector<std::int64_t>{1, 1});
}

TEST_CASE("random matrices match the rational nullspace oracle") {
  std::mt19937 rng(20240817);
  std::uniform_int_distribution<int> dim(1, 6), entry(-9, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = dim(rng), n = dim(rng);
    IMat a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = entry(rng);

    const SmithForm f = smith_normal_form(a);
    // the decomposition itself
    REQUIRE((f.u * a * f.v - f.d).isZero());
    REQUIRE(unimodular(f.u));
    REQUIRE(unimodular(f.v));
    for (int i = 0; i < f.d.rows(); ++i)
      for (int j = 0; j < f.d.cols(); ++j)
        if (i != j) REQUIRE(f.d(i, j) == 0);
    for (size_t k = 0; k + 1 < f.invariant_factors.size(); ++k) {
      REQUIRE(f.invariant_factors[k] > 0);
      REQUIRE(f.invariant_factors[k + 1] % f.invariant_factors[k] == 0);
    }

    // kernel and image ranks agree with the oracle
    const int nullity = nullity_oracle(a);
    REQUIRE(f.rank == n - nullity);
    const IMat k = integer_kernel(a);
    REQUIRE(k.cols() == nullity);
    REQUIRE((a * k).isZero());
    if (k.cols() > 0)  // columns independent
      REQUIRE(smith_normal_form(k).rank == k.cols());
  }
}

TEST_CASE("integer linear solve") {
  IMat a(2, 2);
  a << 2, 0, 0, 3;
  IVec b(2);
  b << 4, 9;
  const auto x = integer_solve(a, b);
  REQUIRE(x.has_value());
  REQUIRE((a * *x - b).isZero());

  b << 1, 3;  // 2x = 1 has no integer solution
  REQUIRE_FALSE(integer_solve(a, b).has_value());

  // underdetermined but solvable
  IMat c(1, 2);
  c << 6, 10;
  IVec d(1);
  d << 8;  // gcd(6,10)=2 divides 8
  const auto y = integer_solve(c, d);
  REQUIRE(y.has_value());
  REQUIRE((c * *y - d).isZero());
  d << 7;
  REQUIRE_FALSE(integer_solve(c, d).has_value());
}

TEST_CASE("lattice membership") {
  IMat l(2, 2);
  l << 2, 0, 0, 4;
  REQUIRE(lattice_contains(l, IVec(Eigen::Vector2i(2, 8).cast<std::int64_t>())));
  REQUIRE_FALSE(
      lattice_contains(l, IVec(Eigen::Vector2i(1, 4).cast<std::int64_t>())));
  const IMat empty(2, 0);
  REQUIRE(lattice_contains(empty, IVec(IVec::Zero(2))));
  REQUIRE_FALSE(
      lattice_contains(empty, IVec(Eigen::Vector2i(0, 1).cast<std::int64_t>())));
  REQUIRE(lattice_subset(empty, l));
}
