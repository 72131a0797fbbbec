#pragma once

#include <vector>

namespace transposer {

inline constexpr int kHermiteDegreeCap = 64;

// Normalized Hermite polynomial H_n = He_n / n! (probabilists' family over
// the weight e^{-x^2/2}), evaluated by the three-term recurrence
//   (n+1) H_{n+1}(x) = x H_n(x) - H_{n-1}(x).
// Degrees above kHermiteDegreeCap are rejected.
double hermite_eval(int degree, double x);

// H_0..H_max_degree at x in one sweep.
std::vector<double> hermite_eval_all(int max_degree, double x);

// Monomial coefficients of H_n (c[j] multiplies x^j). Used by the exact
// Gaussian-moment Gram computation; independent of hermite_eval's recurrence
// evaluation path only in the sense of being coefficient-level.
std::vector<double> hermite_monomial_coeffs(int degree);

// Gauss-Hermite rule for the standard normal weight: sum_i w_i f(x_i)
// approximates E f(xi), exact for polynomials of degree <= 2*points - 1.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int points);

}  // namespace transposer
