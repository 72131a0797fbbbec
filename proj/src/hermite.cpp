#include "transposer/hermite.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace transposer {

double hermite_eval(int degree, double x) {
    if (degree < 0) throw std::invalid_argument("hermite degree must be nonnegative");
    if (degree > kHermiteDegreeCap) {
        throw std::invalid_argument("hermite degree " + std::to_string(degree) +
                                    " exceeds cap " + std::to_string(kHermiteDegreeCap));
    }
    if (degree == 0) return 1.0;
    double prev = 1.0;   // H_0
    double curr = x;     // H_1
    for (int n = 1; n < degree; ++n) {
        const double next = (x * curr - prev) / (n + 1);
        prev = curr;
        curr = next;
    }
    return curr;
}

std::vector<double> hermite_eval_all(int max_degree, double x) {
    if (max_degree < 0 || max_degree > kHermiteDegreeCap) {
        throw std::invalid_argument("hermite degree out of range");
    }
    std::vector<double> h(max_degree + 1);
    h[0] = 1.0;
    if (max_degree >= 1) h[1] = x;
    for (int n = 1; n < max_degree; ++n) {
        h[n + 1] = (x * h[n] - h[n - 1]) / (n + 1);
    }
    return h;
}

std::vector<double> hermite_monomial_coeffs(int degree) {
    if (degree < 0 || degree > kHermiteDegreeCap) {
        throw std::invalid_argument("hermite degree out of range");
    }
    // He_{n+1} = x He_n - n He_{n-1}, then divide by n! at the end.
    std::vector<double> prev{1.0};
    if (degree == 0) return prev;
    std::vector<double> curr{0.0, 1.0};
    for (int n = 1; n < degree; ++n) {
        std::vector<double> next(n + 2, 0.0);
        for (int j = 0; j <= n; ++j) next[j + 1] += curr[j];
        for (int j = 0; j < n; ++j) next[j] -= n * prev[j];
        prev = std::move(curr);
        curr = std::move(next);
    }
    double fact = 1.0;
    for (int j = 2; j <= degree; ++j) fact *= j;
    for (double& c : curr) c /= fact;
    return curr;
}

GaussHermiteRule gauss_hermite(int points) {
    if (points < 1) throw std::invalid_argument("gauss_hermite needs at least one point");
    // Golub-Welsch on the Jacobi matrix of the monic probabilists' family:
    // off-diagonal entries sqrt(n).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int n = 1; n < points; ++n) {
        const double b = std::sqrt(static_cast<double>(n));
        jacobi(n, n - 1) = b;
        jacobi(n - 1, n) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    for (int i = 0; i < points; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double q0 = eig.eigenvectors()(0, i);
        rule.weights[i] = q0 * q0;  // weight function already normalized to mass 1
    }
    return rule;
}

}  // namespace transposer
