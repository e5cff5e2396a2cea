#pragma once

#include "certbound/cert.hpp"
#include "certbound/estimator.hpp"
#include "certbound/relax.hpp"

#include <optional>
#include <string>
#include <vector>

namespace certbound {

struct SAOptions {
  RelaxOptions relax;
  /// Attach a checked rational certificate to every SDP-derived bound.
  bool certified = false;
  /// Gram shift used when solving for a certificate.
  double cert_gram_shift = 1e-6;
  /// Back-off of the rounded bound, normalized units.
  double cert_backoff = 1e-7;
};

enum class BoundSource { Sdp, Constant, Interval, Fallback };

std::string_view to_string(BoundSource s) noexcept;

struct SABound {
  double value = 0.0;
  BoundSource source = BoundSource::Fallback;
  /// The SDP path failed or the certificate could not be produced.
  bool degraded = false;
  std::string note;
  /// First-order moments on the original variables, clamped to the box.
  std::vector<double> point;
  std::optional<SOSCertificate> certificate;
  BoundResult sdp;
};

/// Lifted POP: variables (x, z), box, objective, lifting constraints.
POPInstance to_pop(const SAEstimator& e, const RationalPoly& objective);

/// Lower bound of min objective over the lifted set (hence of the tree on
/// the box). Uses max(order, k0) and takes the better of the SDP and the
/// interval range of the objective.
SABound min_sa(const SAEstimator& e, const SAOptions& options);
/// Same with `objective` (over e.num_vars() variables) replacing e's.
SABound min_sa(const SAEstimator& e, const RationalPoly& objective, const SAOptions& options);
/// Upper bound, computed as -min_sa of the negated objective. A certificate,
/// when present, certifies the negated objective.
SABound max_sa(const SAEstimator& e, const SAOptions& options);
SABound max_sa(const SAEstimator& e, const RationalPoly& objective, const SAOptions& options);

}  // namespace certbound
