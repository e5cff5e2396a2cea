#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace certbound {

/// One coefficient of a symmetric block matrix. Entries with row < col
/// stand for both (row, col) and (col, row).
struct SparseEntry {
  std::size_t block = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Block-diagonal SDP in standard primal form
///
///   minimize <C, X>  subject to  <A_i, X> = b_i,  X = diag(X_1..X_p) >= 0
///
/// with dual  maximize b'y  subject to  C - sum_i y_i A_i = S >= 0.
/// Blocks of size 1 act as nonnegative scalar variables.
struct SDPProblem {
  std::vector<std::size_t> block_sizes;
  std::vector<SparseEntry> objective;
  std::vector<std::vector<SparseEntry>> constraints;
  std::vector<double> rhs;

  std::size_t num_constraints() const noexcept { return constraints.size(); }
  std::size_t total_rows() const noexcept;
  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

enum class SDPStatus { Optimal, Infeasible, Unbounded, Stalled };

std::string_view to_string(SDPStatus s) noexcept;

struct SDPOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  bool record_history = false;
};

struct SDPIterate {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double mu = 0.0;
};

struct SDPSolution {
  SDPStatus status = SDPStatus::Stalled;
  std::string message;
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> S;
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// |pobj - dobj| / (1 + |pobj| + |dobj|)
  double relative_gap = 0.0;
  /// ||b - A(X)||_2 / (1 + ||b||_2)
  double primal_residual = 0.0;
  /// ||C - A'(y) - S||_F / (1 + ||C||_F)
  double dual_residual = 0.0;
  int iterations = 0;
  std::vector<SDPIterate> history;
};

/// Infeasible primal-dual path following with the HKM direction and a
/// Mehrotra predictor-corrector. Dense per block, deterministic.
SDPSolution solve_sdp(const SDPProblem& problem, const SDPOptions& options = {});

/// <A, X> for a sparse symmetric matrix and dense blocks.
double inner(const std::vector<SparseEntry>& a, const std::vector<Eigen::MatrixXd>& x);
/// A(X) for all constraints.
Eigen::VectorXd apply_constraints(const SDPProblem& p, const std::vector<Eigen::MatrixXd>& x);

/// Sparse text dump, one line per nonzero:
///   header  "sdp <num_blocks> <num_constraints>" then "blocks s1 s2 ..."
///   "rhs i value", then "<constraint> <block> <row> <col> <value>" with
///   constraint 0 holding C and 1..m holding A_1..A_m (rows/cols 1-based).
void write_sdp_dump(std::ostream& out, const SDPProblem& problem);

}  // namespace certbound
