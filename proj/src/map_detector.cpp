#include "pmtlink/map_detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pmtlink/errors.hpp"
#include "pmtlink/math_util.hpp"

namespace pmtlink {

double LlrCoefficients::vertex_z() const {
  if (!is_quadratic()) throw NumericError("llr vertex undefined: a2 <= 0");
  return -a1 / (2.0 * a2);
}

double LlrCoefficients::min_statistic() const {
  return evaluate(vertex_z());
}

LlrCoefficients gaussian_ratio_coefficients(const PmtParams& pmt,
                                            double thermal_var) {
  pmt.validate();
  if (!(thermal_var > 0.0)) throw NumericError("thermal_var must be positive");
  const double ae = pmt.pulse_amplitude();
  const double sv = pmt.shot_var();
  const double v1 = thermal_var + sv;
  LlrCoefficients c;
  c.a2 = 0.5 / thermal_var - 0.5 / v1;
  c.a1 = ae / v1;
  c.a0 = 0.5 * std::log(thermal_var / v1) - ae * ae / (2.0 * v1);
  return c;
}

double interval_llr(double x, double gamma_t, double gamma_b) {
  const double num = log_sum_exp(std::log1p(-gamma_t), std::log(gamma_t) + x);
  const double den = log_sum_exp(std::log1p(-gamma_b), std::log(gamma_b) + x);
  return num - den;
}

double interval_llr_slope(double x, double gamma_t, double gamma_b) {
  // F'(x) = (gt - gb) / (gt gb e^x + gt + gb - 2 gt gb + (1-gt)(1-gb) e^-x).
  const double den = gamma_t * gamma_b * std::exp(x) + gamma_t + gamma_b -
                     2.0 * gamma_t * gamma_b +
                     (1.0 - gamma_t) * (1.0 - gamma_b) * std::exp(-x);
  return (gamma_t - gamma_b) / den;
}

double interval_llr_center(double gamma_t, double gamma_b) {
  return 0.5 * std::log((1.0 - gamma_t) * (1.0 - gamma_b) /
                        (gamma_t * gamma_b));
}

double exact_llr(std::span<const double> outputs, const ChannelConfig& config,
                 const PmtParams& pmt) {
  const LlrCoefficients coeff =
      gaussian_ratio_coefficients(pmt, pmt.interval_thermal_var(config.intervals));
  const double gt = config.gamma_t();
  const double gb = config.gamma_b();
  double llr = 0.0;
  for (double z : outputs) llr += interval_llr(coeff.evaluate(z), gt, gb);
  return llr;
}

double statistic_pdf(double x, double gamma, const PmtParams& pmt,
                     double thermal_var, bool* at_vertex_cap) {
  if (at_vertex_cap) *at_vertex_cap = false;
  const LlrCoefficients c = gaussian_ratio_coefficients(pmt, thermal_var);
  if (!c.is_quadratic())
    throw NumericError("statistic_pdf requires a strictly convex statistic");
  const double xmin = c.min_statistic();
  if (x < xmin) return 0.0;
  const double ae = pmt.pulse_amplitude();
  const double sv = pmt.shot_var();
  const double zv = c.vertex_z();
  const double disc = (x - c.a0) / c.a2 + c.a1 * c.a1 / (4.0 * c.a2 * c.a2);
  const double half_width = std::sqrt(std::max(disc, 0.0));
  // Change of variables over the two quadratic roots z = zv +- half_width.
  const std::array<double, 2> roots = {zv - half_width, zv + half_width};
  double density = 0.0;
  for (double z : roots) {
    const double slope = std::abs(2.0 * c.a2 * z + c.a1);
    const double pz = (1.0 - gamma) * gaussian_pdf(z, 0.0, thermal_var) +
                      gamma * gaussian_pdf(z, ae, thermal_var + sv);
    if (slope < 1e-12) {
      // Integrable singularity at the vertex; cap to keep weights finite.
      density += pz / 1e-12;
      if (at_vertex_cap) *at_vertex_cap = true;
    } else {
      density += pz / slope;
    }
  }
  return density;
}

double PiecewiseDetector::evaluate(double x) const {
  if (breakpoints.empty()) throw NumericError("detector has no breakpoints");
  if (x <= breakpoints.front()) return left_plateau;
  if (x >= breakpoints.back()) return right_plateau;
  std::size_t seg = 0;
  while (seg + 2 < breakpoints.size() && x > breakpoints[seg + 1]) ++seg;
  const auto& p = segments[seg];
  return ((p[3] * x + p[2]) * x + p[1]) * x + p[0];
}

std::string PiecewiseDetector::to_record() const {
  std::ostringstream out;
  out.precision(17);
  out << "piecewise-detector v1\n";
  out << "kind " << (kind == Kind::linear ? "linear" : "cubic") << '\n';
  out << "gamma_t " << gamma_t << '\n';
  out << "gamma_b " << gamma_b << '\n';
  out << "center " << center << '\n';
  out << "left_plateau " << left_plateau << '\n';
  out << "right_plateau " << right_plateau << '\n';
  out << "fit_condition " << fit_condition << '\n';
  out << "breakpoints " << breakpoints.size();
  for (double b : breakpoints) out << ' ' << b;
  out << '\n';
  out << "segments " << segments.size() << '\n';
  for (const auto& s : segments)
    out << s[0] << ' ' << s[1] << ' ' << s[2] << ' ' << s[3] << '\n';
  return out.str();
}

PiecewiseDetector PiecewiseDetector::from_record(const std::string& text) {
  std::istringstream in(text);
  std::string word, version;
  in >> word >> version;
  if (word != "piecewise-detector" || version != "v1")
    throw IoError("unrecognized detector record header");
  PiecewiseDetector d;
  auto read_key = [&](const char* key) {
    in >> word;
    if (word != key)
      throw IoError(std::string("detector record: expected key '") + key +
                    "', got '" + word + "'");
  };
  read_key("kind");
  in >> word;
  if (word == "linear")
    d.kind = Kind::linear;
  else if (word == "cubic")
    d.kind = Kind::cubic;
  else
    throw IoError("detector record: unknown kind '" + word + "'");
  read_key("gamma_t");
  in >> d.gamma_t;
  read_key("gamma_b");
  in >> d.gamma_b;
  read_key("center");
  in >> d.center;
  read_key("left_plateau");
  in >> d.left_plateau;
  read_key("right_plateau");
  in >> d.right_plateau;
  read_key("fit_condition");
  in >> d.fit_condition;
  read_key("breakpoints");
  std::size_t nb = 0;
  in >> nb;
  d.breakpoints.resize(nb);
  for (auto& b : d.breakpoints) in >> b;
  read_key("segments");
  std::size_t ns = 0;
  in >> ns;
  d.segments.resize(ns);
  for (auto& s : d.segments) in >> s[0] >> s[1] >> s[2] >> s[3];
  if (!in) throw IoError("detector record: truncated or malformed field");
  if (nb < 2 || nb != ns + 1)
    throw IoError("detector record: breakpoint/segment count mismatch");
  return d;
}

namespace {

// Shared plateau geometry: F approaches log((1-gt)/(1-gb)) as x -> -inf and
// log(gt/gb) as x -> +inf.
struct PlateauInfo {
  double left, right, center, center_value;
};

PlateauInfo plateau_info(double gt, double gb) {
  PlateauInfo p;
  p.left = std::log1p(-gt) - std::log1p(-gb);
  p.right = std::log(gt) - std::log(gb);
  p.center = interval_llr_center(gt, gb);
  p.center_value = 0.5 * std::log(gt * (1.0 - gt) / (gb * (1.0 - gb)));
  return p;
}

}  // namespace

PiecewiseDetector fit_linear_detector(const ChannelConfig& config,
                                      const PmtParams& pmt) {
  pmt.validate();
  config.validate();
  const double gt = config.gamma_t();
  const double gb = config.gamma_b();
  const PlateauInfo p = plateau_info(gt, gb);
  // Slope of F at the symmetry center, in closed form.
  const double k =
      (gt - gb) / (2.0 * std::sqrt(gt * gb * (1.0 - gt) * (1.0 - gb)) + gt +
                   gb - 2.0 * gt * gb);
  PiecewiseDetector d;
  d.kind = PiecewiseDetector::Kind::linear;
  d.gamma_t = gt;
  d.gamma_b = gb;
  d.center = p.center;
  d.left_plateau = p.left;
  d.right_plateau = p.right;
  // Knees where the tangent line meets the plateau levels.
  const double x1 = (p.left - p.center_value) / k + p.center;
  const double x2 = (p.right - p.center_value) / k + p.center;
  d.breakpoints = {x1, x2};
  d.segments = {{p.center_value - k * p.center, k, 0.0, 0.0}};
  d.fit_condition = 1.0;
  return d;
}

PiecewiseDetector fit_cubic_detector(const ChannelConfig& config,
                                     const PmtParams& pmt,
                                     int nodes_per_segment,
                                     WeightModel weights) {
  pmt.validate();
  config.validate();
  if (nodes_per_segment < 8)
    throw UsageError("cubic fit needs at least 8 nodes per segment");
  const double gt = config.gamma_t();
  const double gb = config.gamma_b();
  const double tv = pmt.interval_thermal_var(config.intervals);
  const PlateauInfo p = plateau_info(gt, gb);
  const double x0 = p.center;

  auto weight_at = [&](double x) {
    switch (weights) {
      case WeightModel::signal_one:
        return statistic_pdf(x, gt, pmt, tv);
      case WeightModel::signal_zero:
        return statistic_pdf(x, gb, pmt, tv);
      case WeightModel::marginal:
      default:
        return config.prior_one * statistic_pdf(x, gt, pmt, tv) +
               (1.0 - config.prior_one) * statistic_pdf(x, gb, pmt, tv);
    }
  };

  PiecewiseDetector d;
  d.kind = PiecewiseDetector::Kind::cubic;
  d.gamma_t = gt;
  d.gamma_b = gb;
  d.center = x0;
  d.left_plateau = p.left;
  d.right_plateau = p.right;
  d.breakpoints = {-x0, 0.0, x0, 2.0 * x0};
  d.fit_condition = 1.0;

  std::vector<double> xs(static_cast<std::size_t>(nodes_per_segment));
  std::vector<double> ws(xs.size());
  std::vector<double> ys(xs.size());
  for (std::size_t seg = 0; seg + 1 < d.breakpoints.size(); ++seg) {
    const double lo = d.breakpoints[seg];
    const double hi = d.breakpoints[seg + 1];
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double t = static_cast<double>(j) / (xs.size() - 1.0);
      xs[j] = lo + (hi - lo) * t;
      ws[j] = weight_at(xs[j]);
      ys[j] = interval_llr(xs[j], gt, gb);
    }
    double cond = 0.0;
    d.segments.push_back(detail::fit_weighted_cubic(xs, ws, ys, &cond));
    d.fit_condition = std::max(d.fit_condition, cond);
  }
  return d;
}

int detect_exact(std::span<const double> outputs, const ChannelConfig& config,
                 const PmtParams& pmt) {
  const double eta = config.eta();
  return exact_llr(outputs, config, pmt) > eta ? 1 : 0;
}

int detect_piecewise(std::span<const double> outputs,
                     const PiecewiseDetector& detector,
                     const ChannelConfig& config, const PmtParams& pmt) {
  const LlrCoefficients coeff =
      gaussian_ratio_coefficients(pmt, pmt.interval_thermal_var(config.intervals));
  double llr = 0.0;
  for (double z : outputs) llr += detector.evaluate(coeff.evaluate(z));
  return llr > config.eta() ? 1 : 0;
}

namespace detail {

std::array<double, 4> fit_weighted_cubic(std::span<const double> x,
                                         std::span<const double> weight,
                                         std::span<const double> y,
                                         double* condition) {
  if (x.size() != weight.size() || x.size() != y.size() || x.size() < 4)
    throw NumericError("weighted cubic fit: need >= 4 aligned samples");
  // Normal equations A c = b with A[i][j] = sum w x^(i+j), b[i] = sum w y x^i.
  double moments[7] = {};
  double rhs[4] = {};
  for (std::size_t s = 0; s < x.size(); ++s) {
    const double w = weight[s];
    if (!(w >= 0.0) || !std::isfinite(w))
      throw NumericError("weighted cubic fit: weight must be finite and >= 0");
    double xp = 1.0;
    for (int k = 0; k < 7; ++k) {
      moments[k] += w * xp;
      if (k < 4) rhs[k] += w * y[s] * xp;
      xp *= x[s];
    }
  }
  if (!(moments[0] > 0.0))
    throw NumericError("weighted cubic fit: all weights vanish");
  double a[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a[i][j] = moments[i + j];

  double norm_a = 0.0;
  for (int j = 0; j < 4; ++j) {
    double col = 0.0;
    for (int i = 0; i < 4; ++i) col += std::abs(a[i][j]);
    norm_a = std::max(norm_a, col);
  }

  // LU with partial pivoting, factor kept for the inverse-norm estimate.
  int perm[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300)
      throw NumericError("weighted cubic fit: singular normal equations");
    if (pivot != col) {
      std::swap(perm[pivot], perm[col]);
      for (int j = 0; j < 4; ++j) std::swap(a[pivot][j], a[col][j]);
    }
    for (int r = col + 1; r < 4; ++r) {
      a[r][col] /= a[col][col];
      for (int j = col + 1; j < 4; ++j) a[r][j] -= a[r][col] * a[col][j];
    }
  }

  auto solve = [&](const double in[4], double out[4]) {
    double t[4];
    for (int i = 0; i < 4; ++i) t[i] = in[perm[i]];
    for (int i = 1; i < 4; ++i)
      for (int j = 0; j < i; ++j) t[i] -= a[i][j] * t[j];
    for (int i = 3; i >= 0; --i) {
      for (int j = i + 1; j < 4; ++j) t[i] -= a[i][j] * t[j];
      t[i] /= a[i][i];
    }
    for (int i = 0; i < 4; ++i) out[i] = t[i];
  };

  double sol[4];
  solve(rhs, sol);

  if (condition) {
    // 1-norm of the inverse from its explicit columns; fine at size 4.
    double norm_inv = 0.0;
    for (int j = 0; j < 4; ++j) {
      double e[4] = {}, colv[4];
      e[j] = 1.0;
      solve(e, colv);
      double col = 0.0;
      for (int i = 0; i < 4; ++i) col += std::abs(colv[i]);
      norm_inv = std::max(norm_inv, col);
    }
    *condition = norm_a * norm_inv;
  }
  return {sol[0], sol[1], sol[2], sol[3]};
}

}  // namespace detail

}  // namespace pmtlink
