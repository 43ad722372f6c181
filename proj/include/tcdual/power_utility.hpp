#pragma once

#include <cmath>

#include "tcdual/errors.hpp"

namespace tcdual {

/// U(x) = x^gamma / gamma with conjugate U*(y) = sup_x {U(x) - x y} = -(1/mu) y^mu.
struct PowerUtilityParams {
  double gamma = 0.5;
  double mu = -1.0;  // gamma / (gamma - 1)

  PowerUtilityParams() = default;
  explicit PowerUtilityParams(double g) : gamma(g), mu(g / (g - 1.0)) {
    detail::require(g > 0.0 && g < 1.0, "power utility: require 0 < gamma < 1");
  }

  [[nodiscard]] double utility(double x) const {
    detail::require(x >= 0.0, "power utility: negative wealth");
    return std::pow(x, gamma) / gamma;
  }
  [[nodiscard]] double conjugate(double y) const { return -std::pow(y, mu) / mu; }
};

}  // namespace tcdual
