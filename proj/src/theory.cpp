#include "gmf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmf/errors.hpp"

namespace gmf::theory {

std::string_view to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::HighTemp: return "HighTemp";
    case RegimeLabel::Intermediate: return "Intermediate";
    case RegimeLabel::Frozen: return "Frozen";
  }
  return "?";
}

void validate(const ModelParams& p, DimensionPolicy policy) {
  if (!std::isfinite(p.beta2) || p.beta2 < 0.0)
    throw ParameterError("beta2 must be finite and >= 0, got " + std::to_string(p.beta2));
  if (!std::isfinite(p.q) || p.q <= 1.0)
    throw ParameterError("q must be > 1, got " + std::to_string(p.q));
  if (p.d < 1)
    throw ParameterError("d must be a positive integer, got " + std::to_string(p.d));
  if (policy == DimensionPolicy::GridSupported && p.d > 2)
    throw ParameterError("d must be 1 or 2, got " + std::to_string(p.d));
}

Regime classify_regime(const ModelParams& p, DimensionPolicy policy) {
  validate(p, policy);
  const double d = p.d;
  Regime r{RegimeLabel::HighTemp, 2.0 * d / (2.0 * p.q - 1.0), 2.0 * d};
  if (p.beta2 >= r.boundary_freeze)
    r.label = RegimeLabel::Frozen;
  else if (p.beta2 >= r.boundary_pre)
    r.label = RegimeLabel::Intermediate;
  return r;
}

double simple_scaling_curve(double beta2, double q) {
  return -beta2 * q * q / 2.0 + beta2 * q / 2.0;
}

double prefreezing_curve(double beta2, double q, int d) {
  const double a = 2.0 * d - beta2;
  return a * a / (8.0 * beta2) - d * (q - 1.0);
}

double frozen_curve(double q, int d) { return -d * (q - 1.0); }

double annealed_exponent(const ModelParams& p, DimensionPolicy policy) {
  switch (classify_regime(p, policy).label) {
    case RegimeLabel::HighTemp: return simple_scaling_curve(p.beta2, p.q);
    case RegimeLabel::Intermediate: return prefreezing_curve(p.beta2, p.q, p.d);
    case RegimeLabel::Frozen: return frozen_curve(p.q, p.d);
  }
  return 0.0;
}

double quenched_exponent(const ModelParams& p, DimensionPolicy policy) {
  validate(p, policy);
  const double d = p.d;
  const double q = p.q;
  if (p.beta2 >= 2.0 * d) return -d * (q - 1.0);
  if (p.beta2 >= 2.0 * d / (q * q))
    return d - std::sqrt(2.0 * d) * std::sqrt(p.beta2) * q + p.beta2 * q / 2.0;
  return simple_scaling_curve(p.beta2, q);
}

double participation_exponent(const ModelParams& p, DimensionPolicy policy) {
  if (classify_regime(p, policy).label == RegimeLabel::Frozen) return 0.0;
  return annealed_exponent(p, policy) + p.d * (p.q - 1.0);
}

double tilt_parameter(const ModelParams& p, DimensionPolicy policy) {
  validate(p, policy);
  if (p.beta2 <= 0.0) throw ParameterError("tilt parameter requires beta2 > 0");
  return std::min(1.0, (0.5 + p.d / p.beta2) / p.q);
}

double girsanov_prefactor_exponent(double beta2, double q, double c) {
  const double one_minus_c = 1.0 - c;
  return -(beta2 * q * q / 2.0) * (1.0 - one_minus_c * one_minus_c) + beta2 * q / 2.0;
}

}  // namespace gmf::theory
