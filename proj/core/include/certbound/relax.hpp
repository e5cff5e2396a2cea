#pragma once

#include "certbound/interval.hpp"
#include "certbound/poly.hpp"
#include "certbound/sdp.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace certbound {

/// Polynomial program  min f(x)  s.t.  g_j(x) >= 0, h_l(x) = 0, x in box.
struct POPInstance {
  std::size_t num_vars = 0;
  std::vector<Interval> box;
  RationalPoly objective;
  std::vector<RationalPoly> inequalities;
  std::vector<RationalPoly> equalities;

  void validate() const;
  /// k0 = max(ceil(deg f / 2), max_j ceil(deg g_j / 2)), at least 1.
  unsigned min_order() const;
};

struct RelaxOptions {
  unsigned order = 1;
  double tol = 1e-8;
  int max_iterations = 200;
  /// Cap on the summed Gram block sizes.
  std::size_t max_rows = 2000;
  /// Cap on the number of moment constraints.
  std::size_t max_constraints = 6000;
  /// Safety factor applied to the residual-based bound correction.
  double kappa = 10.0;
  /// Solve with every Gram block shifted by gram_shift * I; certificates
  /// need strictly interior Gram matrices.
  double gram_shift = 0.0;
  /// Trace cost on the multipliers of the +h/-h pair of every equality.
  /// Without it the pair spans a free direction and the dual has no
  /// interior; the bound only loses penalty * trace of those blocks.
  double equality_penalty = 1e-7;
};

/// Q_k assembled on the normalized problem u in [-1,1]^N', x = c + h u,
/// after dropping variables that occur nowhere. The normalized objective is
/// divided by the dyadic `objective_scale`, each constraint by its own.
struct Relaxation {
  unsigned order = 1;
  std::size_t original_vars = 0;
  /// kept[i] is the original index of normalized variable i.
  std::vector<std::size_t> kept;
  std::vector<Rational> center;
  std::vector<Rational> halfwidth;
  RationalPoly objective;
  Rational objective_scale;
  /// g_0 = 1 followed by the box, inequality and equality-pair constraints.
  std::vector<RationalPoly> constraints;
  std::vector<MonomialBasis> bases;
  MonomialBasis moment_basis;
  SDPProblem sdp;
  double gram_shift = 0.0;
};

/// Throws Error(Budget) when a size cap is exceeded and
/// std::invalid_argument when k < k0.
Relaxation assemble_Qk(const POPInstance& pop, const RelaxOptions& options);

struct MomentSolution {
  /// Moments over relaxation.moment_basis; y_0 = 1.
  std::vector<double> moments;
  /// First-order moments mapped back to the original coordinates.
  std::vector<double> point;
  double moment_matrix_min_eigenvalue = 0.0;
};

struct BoundResult {
  double bound = 0.0;
  /// True when the SDP path failed and the coefficient fallback was used.
  bool degraded = false;
  std::string note;
  MomentSolution moments;
  SDPStatus status = SDPStatus::Stalled;
  int iterations = 0;
  double relative_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// mu of the SDP iterate before the residual correction, original units.
  double raw_bound = 0.0;
};

/// Solves an assembled relaxation. When `solution` is non-null the SDP
/// solution (with the Gram shift added back) is stored there.
BoundResult solve_relaxation(const Relaxation& relaxation, const RelaxOptions& options,
                             SDPSolution* solution = nullptr);

/// Lower bound of the POP from Q_k. Never throws on SDP failure: it falls
/// back to the coefficient bound and sets `degraded`.
BoundResult pop_lower_bound(const POPInstance& pop, const RelaxOptions& options);

/// f_0 - sum_{alpha != 0} |f_alpha| of the normalized objective: a valid
/// lower bound over the box that ignores all constraints.
double coefficient_lower_bound(const POPInstance& pop);

/// Numeric identity residual max_alpha |f - mu - sum_j g_j sigma_j|_alpha
/// on the normalized, scaled problem.
double identity_residual(const Relaxation& relaxation, const SDPSolution& solution);

}  // namespace certbound
