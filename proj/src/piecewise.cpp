#include "h2grid/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "h2grid/error.hpp"

namespace h2grid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a) + std::abs(b)); }

}  // namespace

PiecewiseCurve::PiecewiseCurve(std::vector<AffineSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error(ErrorCode::invalid_argument, "piecewise curve without segments");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& seg = segments_[k];
    if (std::isnan(seg.lo) || std::isnan(seg.hi) || !std::isfinite(seg.slope) || !std::isfinite(seg.intercept)) {
      throw Error(ErrorCode::invalid_argument, "piecewise segment with non-finite data");
    }
    const bool ordered = segments_.size() == 1 ? seg.lo <= seg.hi : seg.lo < seg.hi;
    if (!ordered) throw Error(ErrorCode::invalid_argument, "piecewise knees must be strictly increasing");
    if (k + 1 < segments_.size()) {
      const auto& next = segments_[k + 1];
      if (seg.hi != next.lo) throw Error(ErrorCode::invalid_argument, "piecewise segments are not contiguous");
      if (!close(seg.at(seg.hi), next.at(seg.hi))) {
        throw Error(ErrorCode::invalid_argument, "piecewise curve is not continuous at a knee");
      }
    }
  }
}

double PiecewiseCurve::operator()(double x) const {
  for (const auto& seg : segments_) {
    if (x <= seg.hi) return seg.at(x);
  }
  return segments_.back().at(x);
}

PiecewiseCurve PiecewiseCurve::restricted(Interval box) const {
  std::vector<AffineSegment> kept;
  if (box.lo == box.hi) {
    for (const auto& seg : segments_) {
      if (seg.lo <= box.lo && box.lo <= seg.hi) {
        kept.push_back({box.lo, box.lo, seg.slope, seg.intercept});
        break;
      }
    }
  } else {
    for (const auto& seg : segments_) {
      const double lo = std::max(seg.lo, box.lo);
      const double hi = std::min(seg.hi, box.hi);
      if (lo < hi) kept.push_back({lo, hi, seg.slope, seg.intercept});
    }
  }
  if (kept.empty()) throw Error(ErrorCode::invalid_argument, "input box does not intersect the curve");
  return PiecewiseCurve(std::move(kept));
}

Interval PiecewiseCurve::range_over(Interval box) const {
  const auto r = restricted(box);
  Interval out{kInf, -kInf};
  for (const auto& seg : r.segments()) {
    for (double x : {seg.lo, seg.hi}) {
      out.lo = std::min(out.lo, seg.at(x));
      out.hi = std::max(out.hi, seg.at(x));
    }
  }
  return out;
}

// Saturated droop: full output `cap` on one side of `knee`, falling with
// slope `d` to zero on the other. `rising` is true when output grows with x.
static PiecewiseCurve saturated_droop(double cap, double knee, double d, bool rising) {
  if (cap <= 0.0 || d <= 0.0) return PiecewiseCurve({{-kInf, kInf, 0.0, cap > 0.0 ? cap : 0.0}});
  if (rising) {
    const double zero = knee - cap / d;
    return PiecewiseCurve({{-kInf, zero, 0.0, 0.0}, {zero, knee, d, cap - d * knee}, {knee, kInf, 0.0, cap}});
  }
  const double zero = knee + cap / d;
  return PiecewiseCurve({{-kInf, knee, 0.0, cap}, {knee, zero, -d, cap + d * knee}, {zero, kInf, 0.0, 0.0}});
}

PiecewiseCurve electrolyzer_curve(const HydrogenSource& hs) {
  return saturated_droop(hs.p_ely_max, hs.f_ely_knee, hs.d_ely, true);
}

PiecewiseCurve fuelcell_curve(const HydrogenSource& hs) {
  return saturated_droop(hs.p_fc_max, hs.f_fc_knee, hs.d_fc, false);
}

PiecewiseCurve renewable_curve(const RenewableSource& rs, double mpp) {
  return saturated_droop(mpp, rs.f_knee, rs.d_droop, false);
}

PiecewiseCurve voltvar_curve(const VoltVarCurve& vv) {
  std::vector<AffineSegment> segs;
  double band_lo = -kInf;
  if (vv.q_gen_max > 0.0 && vv.d_gen > 0.0) {
    const double sat = vv.u_gen_start - vv.q_gen_max / vv.d_gen;
    segs.push_back({-kInf, sat, 0.0, vv.q_gen_max});
    segs.push_back({sat, vv.u_gen_start, -vv.d_gen, vv.d_gen * vv.u_gen_start});
    band_lo = vv.u_gen_start;
  }
  const bool absorbs = vv.q_abs_max > 0.0 && vv.d_abs > 0.0;
  const double band_hi = absorbs ? vv.u_abs_start : kInf;
  segs.push_back({band_lo, band_hi, 0.0, 0.0});
  if (absorbs) {
    const double sat = vv.u_abs_start + vv.q_abs_max / vv.d_abs;
    segs.push_back({vv.u_abs_start, sat, -vv.d_abs, vv.d_abs * vv.u_abs_start});
    segs.push_back({sat, kInf, 0.0, -vv.q_abs_max});
  }
  return PiecewiseCurve(std::move(segs));
}

BigM compute_big_m(const PiecewiseCurve& curve, Interval input, Interval output) {
  for (double v : {input.lo, input.hi, output.lo, output.hi}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "big-M sizing needs finite bounds");
  }
  if (input.lo > input.hi || output.lo > output.hi) {
    throw Error(ErrorCode::invalid_argument, "big-M sizing needs ordered bounds");
  }
  const auto r = curve.restricted(input);
  BigM m;
  for (const auto& seg : r.segments()) {
    m.value.push_back(std::abs(seg.slope) * input.width() + output.width());
    m.lower.push_back(seg.lo > input.lo ? seg.lo - input.lo : 0.0);
    m.upper.push_back(seg.hi < input.hi ? input.hi - seg.hi : 0.0);
  }
  return m;
}

std::vector<int> linearize_piecewise_affine(MilpModel& model, const PiecewiseCurve& curve, int input, int output,
                                            Interval input_box, Interval output_box, VarKey segment_key,
                                            const std::string& tag, const std::optional<BigM>& bigm) {
  const auto required = compute_big_m(curve, input_box, output_box);
  const auto r = curve.restricted(input_box);
  const auto span = r.range_over(input_box);
  const double slack = 1e-9 * (1.0 + std::abs(output_box.lo) + std::abs(output_box.hi));
  if (span.lo < output_box.lo - slack || span.hi > output_box.hi + slack) {
    throw Error(ErrorCode::invalid_argument, tag + ": output bounds do not cover the curve");
  }
  const BigM& m = bigm ? *bigm : required;
  if (m.value.size() != required.value.size() || m.lower.size() != required.lower.size() ||
      m.upper.size() != required.upper.size()) {
    throw Error(ErrorCode::invalid_argument, tag + ": big-M has the wrong number of segments");
  }
  for (std::size_t k = 0; k < required.value.size(); ++k) {
    if (m.value[k] < required.value[k] || m.lower[k] < required.lower[k] || m.upper[k] < required.upper[k]) {
      throw Error(ErrorCode::invalid_argument, tag + ": insufficient big-M");
    }
  }

  const auto& segs = r.segments();
  if (segs.size() == 1) {
    model.add_constraint({{output, 1.0}, {input, -segs[0].slope}}, Sense::eq, segs[0].intercept, tag);
    return {};
  }

  std::vector<int> z;
  std::vector<LinearTerm> pick;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    VarKey key = segment_key;
    key.k = static_cast<int>(k);
    z.push_back(model.add_variable(key, 0.0, 1.0, true));
    pick.push_back({z.back(), 1.0});
  }
  model.add_constraint(std::move(pick), Sense::eq, 1.0, tag + "-select");

  // Aggregated forms of the membership and output ranges. Redundant once z
  // is integral but much tighter in the relaxation.
  std::vector<LinearTerm> x_lo{{input, 1.0}}, x_hi{{input, 1.0}}, y_lo{{output, 1.0}}, y_hi{{output, 1.0}};
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& seg = segs[k];
    // Curve values at a zero crossing come out as ~1e-14; snap them.
    const double tiny = 1e-12 * (1.0 + std::abs(output_box.lo) + std::abs(output_box.hi));
    double a = seg.at(seg.lo), b = seg.at(seg.hi);
    if (std::abs(a) < tiny) a = 0.0;
    if (std::abs(b) < tiny) b = 0.0;
    x_lo.push_back({z[k], -seg.lo});
    x_hi.push_back({z[k], -seg.hi});
    y_lo.push_back({z[k], -std::min(a, b)});
    y_hi.push_back({z[k], -std::max(a, b)});
  }
  model.add_constraint(std::move(x_lo), Sense::ge, 0.0, tag + "-segment");
  model.add_constraint(std::move(x_hi), Sense::le, 0.0, tag + "-segment");
  model.add_constraint(std::move(y_lo), Sense::ge, 0.0, tag + "-range");
  model.add_constraint(std::move(y_hi), Sense::le, 0.0, tag + "-range");

  // Hull of the graph over the box: valid for every point on the curve.
  std::vector<std::pair<double, double>> pts;
  for (const auto& seg : segs) pts.emplace_back(seg.lo, seg.at(seg.lo));
  pts.emplace_back(segs.back().hi, segs.back().at(segs.back().hi));
  for (const bool upper : {true, false}) {
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
      while (hull.size() >= 2) {
        const auto& a = hull[hull.size() - 2];
        const auto& b = hull.back();
        const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
        if (upper ? cross < 0.0 : cross > 0.0) break;
        hull.pop_back();
      }
      hull.push_back(p);
    }
    for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
      double slope = (hull[k + 1].second - hull[k].second) / (hull[k + 1].first - hull[k].first);
      if (std::abs(slope) < 1e-9) slope = 0.0;  // rounding noise on flat pieces
      model.add_constraint({{output, 1.0}, {input, -slope}}, upper ? Sense::le : Sense::ge,
                           hull[k].second - slope * hull[k].first, tag + "-hull");
    }
  }

  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& seg = segs[k];
    const double mv = m.value[k];
    // y - s x - a <= M (1 - z)  and  >= -M (1 - z)
    model.add_constraint({{output, 1.0}, {input, -seg.slope}, {z[k], mv}}, Sense::le, seg.intercept + mv, tag);
    model.add_constraint({{output, 1.0}, {input, -seg.slope}, {z[k], -mv}}, Sense::ge, seg.intercept - mv, tag);
    model.record_big_m(tag, mv);
    if (m.lower[k] > 0.0) {
      model.add_constraint({{input, 1.0}, {z[k], -m.lower[k]}}, Sense::ge, seg.lo - m.lower[k], tag + "-segment");
    }
    if (m.upper[k] > 0.0) {
      model.add_constraint({{input, 1.0}, {z[k], m.upper[k]}}, Sense::le, seg.hi + m.upper[k], tag + "-segment");
    }
  }
  return z;
}

void linearize_binary_product(MilpModel& model, int x, int p, int y, double p_ub, const std::string& tag) {
  if (!std::isfinite(p_ub) || p_ub < 0.0) {
    throw Error(ErrorCode::invalid_argument, tag + ": product linearization needs a finite upper bound");
  }
  model.add_constraint({{y, 1.0}, {x, -p_ub}}, Sense::le, 0.0, tag);
  model.add_constraint({{y, 1.0}, {p, -1.0}}, Sense::le, 0.0, tag);
  model.add_constraint({{y, 1.0}, {p, -1.0}, {x, -p_ub}}, Sense::ge, -p_ub, tag);
  model.add_constraint({{y, 1.0}}, Sense::ge, 0.0, tag);
}

}  // namespace h2grid
