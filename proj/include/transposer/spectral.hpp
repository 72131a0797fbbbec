#pragma once

#include <span>
#include <vector>

namespace transposer {

inline constexpr double kPi = 3.14159265358979323846;

// Sine eigenfunction of the Dirichlet Laplacian on (0, pi).
struct Eigenfunction {
    int mode = 1;
    double operator()(double x) const;
};

// Spectral space spanned by the first n Dirichlet eigenfunctions on (0, pi):
// lambda_i = i^2, phi_i(x) = sqrt(2/pi) sin(i x).
struct SpectralBasis {
    int modes = 1;

    double eigenvalue(int i) const;  // i is 1-based
    Eigenfunction eigenfunction(int i) const;
};

std::pair<double, Eigenfunction> eigen_pair(int i);

// Coefficients in the phi basis.
struct SpectralCoeffs {
    std::vector<double> values;

    int modes() const { return static_cast<int>(values.size()); }
    double l2_norm_sq() const;
    double h1_seminorm_sq() const;  // sum lambda_i c_i^2
};

// <f, phi_i> for i = 1..n by composite Simpson on a uniform grid over
// [0, pi]. Requires an odd point count of at least 4n + 1.
SpectralCoeffs project_function(std::span<const double> x, std::span<const double> f, int n);

// Pointwise sum of coeff_i phi_i over the given abscissae.
std::vector<double> reconstruct(const SpectralCoeffs& coeffs, std::span<const double> x);

// Uniform grid over [0, pi] with `points` entries.
std::vector<double> uniform_grid(int points);

}  // namespace transposer
