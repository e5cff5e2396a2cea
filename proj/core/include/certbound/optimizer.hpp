#pragma once

#include "certbound/cert.hpp"
#include "certbound/estimator.hpp"
#include "certbound/lifting.hpp"
#include "certbound/quadratic_template.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace certbound {

enum class Mode { Numeric, Certified, IaSos };

std::string_view to_string(Mode m) noexcept;
/// Throws Error(Usage) on an unknown name.
Mode parse_mode(std::string_view name);

struct RunConfig {
  unsigned order = 1;
  std::size_t max_boxes = 200;
  std::size_t template_threshold = 6;
  std::size_t control_points = 1;
  Mode mode = Mode::Numeric;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::optional<double> target;
  /// template_optim calls per box before subdividing.
  unsigned iteration_cap = 4;
  std::size_t hessian_samples = 50;

  /// Throws Error(Usage) when a field is out of range.
  void validate() const;
};

/// Everything template_optim learned about one tree on one box.
struct OptimResult {
  double lower = 0.0;
  double upper = 0.0;
  SAEstimator estimator;
  /// The root min_sa, carrying the moment point.
  SABound root;
  /// Every SDP-backed bound the result depends on (enclosures of
  /// transcendental arguments, template offsets, the root bounds).
  std::vector<SABound> dependencies;
  std::size_t templates_applied = 0;
  std::vector<std::string> warnings;
};

struct OptimOptions {
  SAOptions sa;
  TemplateOptions templ;
  bool ia_sos = false;
};

OptimOptions make_optim_options(const RunConfig& cfg);

/// Recursive estimator construction: semialgebraic leaves are lifted
/// exactly, transcendental nodes get max-plus parabolas anchored at the
/// control points mapped through their argument, binary nodes compose, and
/// every node passes through build_template. Returns lower <= t <= upper on
/// the box.
OptimResult template_optim(const ExprPtr& t, const Box& box, std::span<const std::vector<double>> points,
                           const OptimOptions& options);

/// s plus the moment point clamped to the box, unless it duplicates an
/// existing point within 1e-8 relative.
std::vector<std::vector<double>> refine_control_points(const Box& box, std::span<const std::vector<double>> s,
                                                       std::span<const double> point);

/// Minimizer candidates: projected gradient descent from the box midpoint
/// and seeded Halton starts; distinct results sorted by value.
std::vector<std::vector<double>> local_descent(const ExprPtr& t, const Box& box, std::size_t count,
                                               std::uint64_t seed, unsigned steps = 300);

enum class BoxStatus { Proved, Split, Unproved };

std::string_view to_string(BoxStatus s) noexcept;

struct BoxRecord {
  std::size_t id = 0;
  std::size_t parent = 0;  // equals id for the root
  unsigned depth = 0;
  Box box;
  double lower = 0.0;
  double upper = 0.0;
  BoxStatus status = BoxStatus::Unproved;
  unsigned iterations = 0;
  std::size_t lifting_count = 0;
  /// Control points after the last iteration.
  std::vector<std::vector<double>> points;
  /// Root lower bound of each template_optim iteration.
  std::vector<double> trace;
  /// Certificate file names (certified mode).
  std::vector<std::string> certificates;
  std::string note;
};

struct BoundReport {
  std::string problem;
  RunConfig config;
  /// Every processed box, in processing order; leaves are the non-split ones.
  std::vector<BoxRecord> boxes;
  double global_bound = 0.0;
  double global_upper = 0.0;
  bool proved = false;
  std::string status;
  double wall_seconds = 0.0;
  /// In-memory certificates keyed by the names used in the records.
  std::vector<std::pair<std::string, SOSCertificate>> certificates;

  std::vector<const BoxRecord*> leaves() const;
  std::size_t box_count() const noexcept { return boxes.size(); }
  std::size_t max_lifting() const;
  std::size_t max_control_points() const;
};

/// Branch and bound over the box: per box the dynamic control-point loop,
/// split at the midpoint of the widest coordinate when the target is not
/// reached, widest box first.
BoundReport certify_bound(const ExprPtr& t, const Box& box, const RunConfig& cfg, std::string problem = "");

/// Writes every in-memory certificate of the report into `dir`.
void write_certificates(const BoundReport& report, const std::string& dir);

struct EstimatorCertificateCheck {
  Verdict verdict = Verdict::NotApplicable;
  std::size_t checked = 0;
  std::vector<std::string> invalid;
};

/// Re-reads and checks every certificate referenced by the report from
/// `dir`. NotApplicable outside certified mode; missing or failing files are
/// listed by name.
EstimatorCertificateCheck check_estimator_certificates(const BoundReport& report, const std::string& dir);

/// Structured text report and its parser (lossless round trip).
std::string format_report(const BoundReport& report, bool include_timing = false);
/// Throws ParseError on malformed input.
BoundReport parse_report(std::string_view text);

}  // namespace certbound
