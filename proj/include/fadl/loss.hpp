#pragma once

#include <string>
#include <string_view>

namespace fadl {

enum class LossKind { LeastSquares, Logistic, SquaredHinge };

struct LossDerivatives {
  double first;
  double second;  // generalized second derivative for the squared hinge
};

/// l(z, y) for margin z = w.x and label y in {+1, -1}.
///   least squares  1/2 (z - y)^2
///   logistic       ln(1 + exp(-y z))
///   squared hinge  max(0, 1 - y z)^2
/// Throws InputError for non-finite z or a label other than +-1.
double loss_value(LossKind loss, double z, double y);

/// dl/dz and d2l/dz2. Squared hinge uses 2 inside the margin (y z < 1), else 0.
LossDerivatives loss_derivatives(LossKind loss, double z, double y);

/// Upper bound on d2l/dz2: 1, 1/4 and 2 respectively.
double curvature_bound(LossKind loss);

std::string_view to_string(LossKind loss);
/// Accepts "least-squares", "logistic", "squared-hinge". Throws InputError otherwise.
LossKind parse_loss(std::string_view name);

namespace detail {

// Unchecked kernels used on hot paths after inputs were validated.
double loss_value_unchecked(LossKind loss, double z, double y);
double loss_first_unchecked(LossKind loss, double z, double y);
double loss_second_unchecked(LossKind loss, double z, double y);
/// l(z + delta, y) - l(z, y), accurate when delta is small next to l itself.
double loss_change_unchecked(LossKind loss, double z, double delta, double y);

}  // namespace detail
}  // namespace fadl
