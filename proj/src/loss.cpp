#include "fadl/loss.hpp"

#include <cmath>

#include "fadl/errors.hpp"

namespace fadl {
namespace {

void check_inputs(double z, double y) {
  if (!std::isfinite(z)) throw InputError("loss evaluated at a non-finite margin");
  if (y != 1.0 && y != -1.0) throw InputError("loss label must be +1 or -1");
}

}  // namespace

namespace detail {

double loss_value_unchecked(LossKind loss, double z, double y) {
  switch (loss) {
    case LossKind::LeastSquares: {
      const double r = z - y;
      return 0.5 * r * r;
    }
    case LossKind::Logistic: {
      const double yz = y * z;
      // ln(1 + e^{-yz}) without overflow for large |yz|
      return yz >= 0.0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
    }
    case LossKind::SquaredHinge: {
      const double slack = 1.0 - y * z;
      return slack > 0.0 ? slack * slack : 0.0;
    }
  }
  return 0.0;
}

double loss_change_unchecked(LossKind loss, double z, double delta, double y) {
  switch (loss) {
    case LossKind::LeastSquares:
      return delta * (z - y + 0.5 * delta);
    case LossKind::Logistic: {
      const double a = y * z, b = y * delta;
      if (std::abs(b) > 1.0) break;
      // ln((1 + e^{-a-b}) / (1 + e^{-a})) = ln(1 + s (e^{-b} - 1)), s = 1 / (1 + e^a)
      const double s = a >= 0.0 ? std::exp(-a) / (1.0 + std::exp(-a)) : 1.0 / (1.0 + std::exp(a));
      return std::log1p(s * std::expm1(-b));
    }
    case LossKind::SquaredHinge: {
      const double s0 = 1.0 - y * z, s1 = s0 - y * delta;
      if (s0 > 0.0 && s1 > 0.0) return -y * delta * (s0 + s1);
      break;
    }
  }
  return loss_value_unchecked(loss, z + delta, y) - loss_value_unchecked(loss, z, y);
}

double loss_first_unchecked(LossKind loss, double z, double y) {
  switch (loss) {
    case LossKind::LeastSquares:
      return z - y;
    case LossKind::Logistic: {
      const double yz = y * z;
      // -y * sigmoid(-yz)
      const double s = yz >= 0.0 ? std::exp(-yz) / (1.0 + std::exp(-yz)) : 1.0 / (1.0 + std::exp(yz));
      return -y * s;
    }
    case LossKind::SquaredHinge: {
      const double slack = 1.0 - y * z;
      return slack > 0.0 ? -2.0 * y * slack : 0.0;
    }
  }
  return 0.0;
}

double loss_second_unchecked(LossKind loss, double z, double y) {
  switch (loss) {
    case LossKind::LeastSquares:
      return 1.0;
    case LossKind::Logistic: {
      const double e = std::exp(-std::abs(z));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case LossKind::SquaredHinge:
      return y * z < 1.0 ? 2.0 : 0.0;
  }
  return 0.0;
}

}  // namespace detail

double loss_value(LossKind loss, double z, double y) {
  check_inputs(z, y);
  return detail::loss_value_unchecked(loss, z, y);
}

LossDerivatives loss_derivatives(LossKind loss, double z, double y) {
  check_inputs(z, y);
  return {detail::loss_first_unchecked(loss, z, y), detail::loss_second_unchecked(loss, z, y)};
}

double curvature_bound(LossKind loss) {
  switch (loss) {
    case LossKind::LeastSquares:
      return 1.0;
    case LossKind::Logistic:
      return 0.25;
    case LossKind::SquaredHinge:
      return 2.0;
  }
  return 0.0;
}

std::string_view to_string(LossKind loss) {
  switch (loss) {
    case LossKind::LeastSquares:
      return "least-squares";
    case LossKind::Logistic:
      return "logistic";
    case LossKind::SquaredHinge:
      return "squared-hinge";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  if (name == "least-squares") return LossKind::LeastSquares;
  if (name == "logistic") return LossKind::Logistic;
  if (name == "squared-hinge") return LossKind::SquaredHinge;
  throw InputError("unknown loss '" + std::string(name) + "'");
}

}  // namespace fadl
