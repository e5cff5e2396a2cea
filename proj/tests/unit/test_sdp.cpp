#include "certbound/relax.hpp"
#include "certbound/sdp.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

using namespace certbound;

namespace {

// Symmetric matrix as sparse entries (row <= col).
std::vector<SparseEntry> to_entries(std::size_t block, const Eigen::MatrixXd& m) {
  std::vector<SparseEntry> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = r; c < m.cols(); ++c)
      if (m(r, c) != 0.0)
        out.push_back({block, static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
  return out;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

struct Constructed {
  SDPProblem problem;
  double optimum = 0.0;
};

// Builds an SDP from a prescribed strictly complementary pair (X*, S*):
// X* and S* share eigenvectors with disjoint supports, A_i are random,
// b = A(X*), C = S* + sum y*_i A_i. Then <C,X*> = b'y* is the optimum.
Constructed construct(std::mt19937_64& rng, const std::vector<int>& sizes, int m) {
  std::uniform_real_distribution<double> pos(0.5, 2.0), u(-1, 1);
  std::vector<Eigen::MatrixXd> xs, ss;
  for (int n : sizes) {
    const Eigen::MatrixXd q = random_orthogonal(rng, n);
    const int rank = n == 1 ? (u(rng) > 0 ? 1 : 0) : n / 2 + 1;
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n), ds = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) (i < rank ? dx(i) : ds(i)) = pos(rng);
    xs.push_back(q * dx.asDiagonal() * q.transpose());
    ss.push_back(q * ds.asDiagonal() * q.transpose());
  }
  Constructed out;
  SDPProblem& p = out.problem;
  for (int n : sizes) p.block_sizes.push_back(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> c = ss;
  for (int i = 0; i < m; ++i) {
    std::vector<SparseEntry> a;
    double b = 0.0;
    const double y = u(rng);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const int n = sizes[k];
      Eigen::MatrixXd ak(n, n);
      for (int r = 0; r < n; ++r)
        for (int col = r; col < n; ++col) ak(r, col) = ak(col, r) = u(rng);
      b += (ak.array() * xs[k].array()).sum();
      c[k] += y * ak;
      auto e = to_entries(k, ak);
      a.insert(a.end(), e.begin(), e.end());
    }
    p.constraints.push_back(std::move(a));
    p.rhs.push_back(b);
  }
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    auto e = to_entries(k, c[k]);
    p.objective.insert(p.objective.end(), e.begin(), e.end());
    out.optimum += (c[k].array() * xs[k].array()).sum();
  }
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST(Sdp, TraceWithFixedEntry) {
  SDPProblem p;
  p.block_sizes = {2};
  p.objective = {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}};
  p.constraints = {{{0, 0, 0, 1.0}}};
  p.rhs = {1.0};
  const auto s = solve_sdp(p);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(s.dual_objective, 1.0, 1e-7);
  EXPECT_NEAR(s.X[0](0, 0), 1.0, 1e-6);
  EXPECT_NEAR(s.X[0](1, 1), 0.0, 1e-6);
  EXPECT_NEAR(s.X[0](0, 1), 0.0, 1e-6);
}

TEST(Sdp, LasserreFirstOrderLinear) {
  POPInstance pop;
  pop.num_vars = 1;
  pop.box = {Interval(0, 1)};
  pop.objective = RationalPoly::variable(1, 0);
  const Relaxation r = assemble_Qk(pop, {});
  SDPSolution s;
  const BoundResult b = solve_relaxation(r, {}, &s);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  EXPECT_NEAR(b.bound, 0.0, 1e-6);
  EXPECT_LE(b.bound, 0.0);
  EXPECT_NEAR(solve_sdp(r.sdp).dual_objective, s.dual_objective, 1e-9);
}

TEST(Sdp, InfeasibleDetected) {
  SDPProblem p;
  p.block_sizes = {2};
  p.objective = {{0, 0, 0, 1.0}};
  p.constraints = {{{0, 0, 0, 1.0}}};
  p.rhs = {-1.0};
  const auto s = solve_sdp(p);
  EXPECT_NE(s.status, SDPStatus::Optimal);
}

TEST(Sdp, ValidateRejectsBadInput) {
  SDPProblem p;
  p.block_sizes = {2};
  p.constraints = {{{0, 2, 0, 1.0}}};
  p.rhs = {1.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  SDPProblem q;
  q.block_sizes = {2};
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

// 20 problems with known optimum, recovered to 1e-6 relative.
TEST(SdpConstructed, RecoversOptimum) {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> nb(1, 3), bs(1, 6), mm(2, 12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes;
    const int blocks = trial == 0 ? 1 : nb(rng);
    for (int k = 0; k < blocks; ++k) sizes.push_back(trial == 0 ? 5 : bs(rng));
    int total = 0;
    for (int n : sizes) total += n * (n + 1) / 2;
    const int m = std::min(mm(rng), total);
    const Constructed c = construct(rng, sizes, m);
    SDPOptions opt;
    opt.record_history = true;
    const auto s = solve_sdp(c.problem, opt);
    ASSERT_EQ(s.status, SDPStatus::Optimal) << "trial " << trial << ": " << s.message;
    const double rel = std::abs(s.primal_objective - c.optimum) / (1 + std::abs(c.optimum));
    EXPECT_LE(rel, 1e-6) << "trial " << trial;
    EXPECT_LE(std::abs(s.dual_objective - c.optimum) / (1 + std::abs(c.optimum)), 1e-6);

    // Contracts on Optimal.
    EXPECT_LE(s.relative_gap, opt.tol * 10);
    EXPECT_LE(s.primal_residual, opt.tol * 10);
    EXPECT_LE(s.dual_residual, opt.tol * 10);
    for (std::size_t k = 0; k < s.X.size(); ++k) {
      EXPECT_GE(min_eigenvalue(s.X[k]), -1e-7);
      EXPECT_GE(min_eigenvalue(s.S[k]), -1e-7);
    }
    EXPECT_LE(s.iterations, opt.max_iterations);
    // Weak duality at the returned feasible pair.
    EXPECT_GE(s.primal_objective, s.dual_objective - 1e-9 * (1 + std::abs(c.optimum)));
    // ... and at every recorded iterate that is feasible to tolerance.
    for (const auto& it : s.history)
      if (it.primal_residual <= opt.tol && it.dual_residual <= opt.tol)
        EXPECT_GE(it.primal_objective, it.dual_objective - 1e-9 * (1 + std::abs(c.optimum)));
  }
}

TEST(SdpConstructed, ResidualsFromReturnedIterate) {
  std::mt19937_64 rng(77);
  const Constructed c = construct(rng, {4, 3, 1}, 8);
  const auto s = solve_sdp(c.problem);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  const Eigen::VectorXd ax = apply_constraints(c.problem, s.X);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(c.problem.rhs.data(), c.problem.rhs.size());
  EXPECT_LE((ax - b).norm() / (1 + b.norm()), 1e-7);
  EXPECT_NEAR(inner(c.problem.objective, s.X), s.primal_objective, 1e-9 * (1 + std::abs(s.primal_objective)));
}

TEST(Sdp, Deterministic) {
  std::mt19937_64 rng(5);
  const Constructed c = construct(rng, {5, 2}, 7);
  const auto a = solve_sdp(c.problem), b = solve_sdp(c.problem);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.primal_objective, b.primal_objective);
  EXPECT_EQ(a.dual_objective, b.dual_objective);
  EXPECT_TRUE(a.y == b.y);
}

TEST(Sdp, DumpFormat) {
  SDPProblem p;
  p.block_sizes = {2, 1};
  p.objective = {{0, 0, 1, 0.5}};
  p.constraints = {{{0, 0, 0, 1.0}, {1, 0, 0, 2.0}}};
  p.rhs = {3.0};
  std::ostringstream out;
  write_sdp_dump(out, p);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("sdp 2 1\n", 0), 0u);
  EXPECT_NE(s.find("blocks 2 1"), std::string::npos);
  EXPECT_NE(s.find("0 1 1 2 0.5"), std::string::npos);
  EXPECT_NE(s.find("1 2 1 1 2"), std::string::npos);
}
