#pragma once

// Piecewise-affine curves and their big-M mixed-integer encodings.

#include <optional>
#include <string>
#include <vector>

#include "h2grid/case.hpp"
#include "h2grid/milp_model.hpp"

namespace h2grid {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// y = intercept + slope * x for x in [lo, hi]. The outer segments may be
/// unbounded (lo = -inf or hi = +inf).
struct AffineSegment {
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;

  double at(double x) const { return intercept + slope * x; }
  bool operator==(const AffineSegment&) const = default;
};

class PiecewiseCurve {
 public:
  PiecewiseCurve() = default;
  /// Segments must be contiguous, strictly increasing and continuous at
  /// every knee; throws Error(invalid_argument) otherwise.
  explicit PiecewiseCurve(std::vector<AffineSegment> segments);

  const std::vector<AffineSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  double operator()(double x) const;

  /// Segments overlapping the box with positive length, clipped to it. For
  /// a degenerate box only the first segment containing the point is kept.
  PiecewiseCurve restricted(Interval box) const;

  /// Smallest and largest value over the box.
  Interval range_over(Interval box) const;

 private:
  std::vector<AffineSegment> segments_;
};

PiecewiseCurve electrolyzer_curve(const HydrogenSource& hs);
PiecewiseCurve fuelcell_curve(const HydrogenSource& hs);
PiecewiseCurve renewable_curve(const RenewableSource& rs, double mpp);
PiecewiseCurve voltvar_curve(const VoltVarCurve& vv);

/// Per-segment relaxation constants for a curve restricted to an input box.
struct BigM {
  /// For |y - (a + s x)| <= M (1 - z): |s| * input width + output width.
  std::vector<double> value;
  /// For x >= lo - M (1 - z); zero when the segment starts at the box edge.
  std::vector<double> lower;
  /// For x <= hi + M (1 - z); zero when the segment ends at the box edge.
  std::vector<double> upper;
};

/// `curve` is restricted to `input` first. Throws on non-finite bounds.
BigM compute_big_m(const PiecewiseCurve& curve, Interval input, Interval output);

/// Emits one binary per segment of the restricted curve with sum 1, and
/// segment membership / equality rows each relaxed by M (1 - z). A curve
/// with a single segment in the box becomes a plain equality and no binary.
/// Returns the ids of the segment binaries. `bigm`, when given, must
/// dominate compute_big_m() or Error(invalid_argument) is thrown.
std::vector<int> linearize_piecewise_affine(MilpModel& model, const PiecewiseCurve& curve, int input,
                                            int output, Interval input_box, Interval output_box,
                                            VarKey segment_key, const std::string& tag,
                                            const std::optional<BigM>& bigm = std::nullopt);

/// y = x * p for binary x and p in [0, p_ub]:
///   y <= p_ub x,  y <= p,  y >= p - p_ub (1 - x),  y >= 0.
void linearize_binary_product(MilpModel& model, int x, int p, int y, double p_ub, const std::string& tag);

}  // namespace h2grid
