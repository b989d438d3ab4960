#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pmtlink/channel.hpp"

namespace pmtlink {

// Coefficients of the per-interval Gaussian log ratio
// x(z) = log G1(z)/G0(z) = a2 z^2 + a1 z + a0 (natural log).
struct LlrCoefficients {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  double evaluate(double z) const { return (a2 * z + a1) * z + a0; }
  bool is_quadratic() const { return a2 > 0.0; }
  double vertex_z() const;       // argmin of x(z); requires a2 > 0
  double min_statistic() const;  // x at the vertex; requires a2 > 0
};

LlrCoefficients gaussian_ratio_coefficients(const PmtParams& pmt,
                                            double thermal_var);

// Per-interval LLR as a function of the Gaussian log ratio x:
// F(x) = log[((1-gamma_t) + gamma_t e^x) / ((1-gamma_b) + gamma_b e^x)].
double interval_llr(double x, double gamma_t, double gamma_b);
double interval_llr_slope(double x, double gamma_t, double gamma_b);  // F'(x)
// Point symmetry center x0: F(x0+d) + F(x0-d) = 2 F(x0).
double interval_llr_center(double gamma_t, double gamma_b);

// Symbol LLR: sum of F(x(z_m)) over all intervals, natural log.
double exact_llr(std::span<const double> outputs, const ChannelConfig& config,
                 const PmtParams& pmt);

// Density of the statistic x = a2 z^2 + a1 z + a0 when z follows the
// single-photon window density with rate gamma. At the quadratic vertex the
// true density diverges; the value is capped and *at_vertex_cap set.
double statistic_pdf(double x, double gamma, const PmtParams& pmt,
                     double thermal_var, bool* at_vertex_cap = nullptr);

// Piecewise polynomial surrogate for F. Plateaus outside the outermost
// breakpoints; polynomial segments between consecutive breakpoints.
struct PiecewiseDetector {
  enum class Kind { linear, cubic };

  Kind kind = Kind::linear;
  double gamma_t = 0.0, gamma_b = 0.0;
  double center = 0.0;  // x0
  double left_plateau = 0.0, right_plateau = 0.0;
  std::vector<double> breakpoints;             // strictly increasing
  std::vector<std::array<double, 4>> segments; // ascending coefficients
  double fit_condition = 0.0;  // worst 1-norm condition of the fitted systems

  double evaluate(double x) const;
  std::string to_record() const;  // versioned plain-text serialization
  static PiecewiseDetector from_record(const std::string& text);
};

enum class WeightModel { marginal, signal_one, signal_zero };

// Tangent construction: line through (x0, F(x0)) with slope F'(x0), clipped
// at the plateau levels.
PiecewiseDetector fit_linear_detector(const ChannelConfig& config,
                                      const PmtParams& pmt);

// Weighted least-squares cubic per segment over (-x0,0], (0,x0], (x0,2x0],
// weighted by the statistic density at `nodes_per_segment` equispaced nodes.
PiecewiseDetector fit_cubic_detector(const ChannelConfig& config,
                                     const PmtParams& pmt,
                                     int nodes_per_segment = 201,
                                     WeightModel weights = WeightModel::marginal);

// MAP decision: 1 iff the symbol LLR exceeds eta = log((1-w)/w).
int detect_exact(std::span<const double> outputs, const ChannelConfig& config,
                 const PmtParams& pmt);
int detect_piecewise(std::span<const double> outputs,
                     const PiecewiseDetector& detector,
                     const ChannelConfig& config, const PmtParams& pmt);

namespace detail {
// Weighted LS fit of y ~ cubic(x); returns ascending coefficients and writes
// the 1-norm condition estimate of the normal system if requested.
std::array<double, 4> fit_weighted_cubic(std::span<const double> x,
                                         std::span<const double> weight,
                                         std::span<const double> y,
                                         double* condition = nullptr);
}  // namespace detail

}  // namespace pmtlink
