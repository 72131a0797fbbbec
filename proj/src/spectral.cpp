#include "transposer/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace transposer {

double Eigenfunction::operator()(double x) const {
    return std::sqrt(2.0 / kPi) * std::sin(mode * x);
}

double SpectralBasis::eigenvalue(int i) const {
    if (i < 1 || i > modes) throw std::invalid_argument("eigenvalue mode out of range");
    return static_cast<double>(i) * i;
}

Eigenfunction SpectralBasis::eigenfunction(int i) const {
    if (i < 1 || i > modes) throw std::invalid_argument("eigenfunction mode out of range");
    return Eigenfunction{i};
}

std::pair<double, Eigenfunction> eigen_pair(int i) {
    if (i < 1) throw std::invalid_argument("Dirichlet modes are numbered from 1");
    return {static_cast<double>(i) * i, Eigenfunction{i}};
}

double SpectralCoeffs::l2_norm_sq() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
}

double SpectralCoeffs::h1_seminorm_sq() const {
    double s = 0.0;
    for (int i = 0; i < modes(); ++i) s += (i + 1.0) * (i + 1.0) * values[i] * values[i];
    return s;
}

SpectralCoeffs project_function(std::span<const double> x, std::span<const double> f, int n) {
    if (n < 1) throw std::invalid_argument("projection needs n >= 1 modes");
    const int points = static_cast<int>(x.size());
    const int minimum = 4 * n + 1;
    if (points < minimum || points % 2 == 0) {
        throw std::invalid_argument("projection grid needs an odd point count of at least " +
                                    std::to_string(minimum % 2 == 1 ? minimum : minimum + 1));
    }
    if (f.size() != x.size()) throw std::invalid_argument("grid/value length mismatch");
    const double h = (x.back() - x.front()) / (points - 1);
    for (int i = 0; i + 1 < points; ++i) {
        if (std::abs((x[i + 1] - x[i]) - h) > 1e-12 * kPi) {
            throw std::invalid_argument("projection grid must be uniform");
        }
    }

    SpectralCoeffs out;
    out.values.resize(n);
    for (int mode = 1; mode <= n; ++mode) {
        const Eigenfunction phi{mode};
        double s = f[0] * phi(x[0]) + f[points - 1] * phi(x[points - 1]);
        for (int i = 1; i + 1 < points; ++i) {
            s += (i % 2 == 1 ? 4.0 : 2.0) * f[i] * phi(x[i]);
        }
        out.values[mode - 1] = s * h / 3.0;
    }
    return out;
}

std::vector<double> reconstruct(const SpectralCoeffs& coeffs, std::span<const double> x) {
    std::vector<double> out(x.size(), 0.0);
    for (int mode = 1; mode <= coeffs.modes(); ++mode) {
        const double c = coeffs.values[mode - 1];
        if (c == 0.0) continue;
        const Eigenfunction phi{mode};
        for (std::size_t i = 0; i < x.size(); ++i) out[i] += c * phi(x[i]);
    }
    return out;
}

std::vector<double> uniform_grid(int points) {
    if (points < 2) throw std::invalid_argument("grid needs at least two points");
    std::vector<double> x(points);
    for (int i = 0; i < points; ++i) x[i] = kPi * i / (points - 1);
    return x;
}

}  // namespace transposer
