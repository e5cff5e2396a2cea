#pragma once

#include "certbound/matrix.hpp"
#include "certbound/poly.hpp"
#include "certbound/rational.hpp"
#include "certbound/relax.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace certbound {

/// Exact Putinar certificate  f - mu = sum_j g_j * (v_j' Q_j v_j)  on the
/// normalized problem u in [-1,1]^n. The affine map x = center + halfwidth*u
/// and the objective scale tie it back to the original POP: the certified
/// bound in original units is mu * objective_scale.
struct SOSCertificate {
  std::size_t num_vars = 0;
  unsigned order = 1;
  Rational mu;
  RationalPoly objective;
  std::vector<RationalPoly> constraints;
  std::vector<MonomialBasis> bases;
  std::vector<Matrix<Rational>> grams;

  std::size_t original_vars = 0;
  std::vector<std::size_t> kept;
  std::vector<Rational> center;
  std::vector<Rational> halfwidth;
  Rational objective_scale{1};
  std::uint64_t problem_hash = 0;

  Rational original_bound() const { return mu * objective_scale; }
};

enum class Verdict { Valid, Invalid, NotApplicable };

std::string_view to_string(Verdict v) noexcept;

struct CertificateCheck {
  Verdict verdict = Verdict::Invalid;
  /// First failing check, empty when valid.
  std::string reason;
  /// Human-readable chain of implications behind a Valid verdict.
  std::vector<std::string> chain;
};

/// Exact verification: shapes, symmetry, PSD by LDL', hash, and the
/// coefficientwise identity.
CertificateCheck check_certificate(const SOSCertificate& c);

/// Exact PSD test by LDL' with symmetric (largest diagonal) pivoting. A zero
/// pivot with a nonzero remaining row means indefinite.
bool is_psd_exact(const Matrix<Rational>& m, std::string* reason = nullptr);

struct RoundOptions {
  /// Back-off delta of the first round; later rounds use 10^r times it.
  double backoff = 0.0;
  std::vector<unsigned> denominator_bits{10, 20, 30, 53};
};

/// Rounds the numeric Gram blocks to dyadics, fixes mu = target - delta and
/// projects Q_0 onto the affine space of the coefficient constraints, then
/// verifies PSD-ness. `mu_target` is in normalized (scaled) units. Returns
/// nullopt after all rounds fail.
std::optional<SOSCertificate> round_project(const Relaxation& relaxation, const SDPSolution& solution,
                                            const Rational& mu_target, const RoundOptions& options = {});

/// FNV-1a over the canonical rendering of the normalized problem.
std::uint64_t problem_hash(const SOSCertificate& c);

void write_certificate(std::ostream& out, const SOSCertificate& c);
/// Throws ParseError on malformed input.
SOSCertificate read_certificate(std::istream& in);

}  // namespace certbound
