#include "transposer/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace transposer {

void ForwardProblem::validate() const {
    const int n = basis.modes;
    if (n < 1) throw std::invalid_argument("forward problem needs at least one mode");
    if (initial.modes() != n) throw std::invalid_argument("initial datum mode mismatch");
    if (noise.modes() != n) throw std::invalid_argument("noise mode mismatch");
    if (!control.catalog_ptr()) throw std::invalid_argument("forward problem needs a control grid");
    if (control.modes() != n) throw std::invalid_argument("control mode mismatch");
    if (control.slots() != partition.steps) {
        throw std::invalid_argument("control slot count does not match the partition");
    }
}

ForwardTrajectory solve_implicit(const ForwardProblem& problem) {
    problem.validate();
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const double tau = problem.partition.dt();
    const double root_tau = std::sqrt(tau);
    const CatalogPtr cat = problem.control.catalog_ptr();
    const Eigen::VectorXd resolvent = lambda0(problem.basis, tau);
    const int M = cat->max_degree();
    if (M < 1) throw std::invalid_argument("forward solves need chaos degree >= 1 for the noise");

    ForwardTrajectory out;
    out.values.reserve(N + 1);
    ChaosRv y(cat, n);
    for (int m = 0; m < n; ++m) y.at(m, 0) = problem.initial.values[m];
    out.values.push_back(y);

    for (int k = 0; k < N; ++k) {
        ChaosRv next = y;
        next.add_scaled(problem.control.slot_value(k), tau);
        // sigma Delta_{k+1}W: a degree-one term on the slot-k increment.
        const MultiIndex inc = MultiIndex().raised(k);
        const int ordinal = cat->ordinal(inc);
        for (int m = 0; m < n; ++m) {
            next.at(m, ordinal) += root_tau * problem.noise.values[m];
        }
        for (int m = 0; m < n; ++m) {
            auto c = next.mode_coeffs(m);
            for (double& v : c) v *= resolvent(m);
        }
        out.values.push_back(next);
        y = std::move(next);
    }
    return out;
}

const ChaosRv& terminal_value(const ForwardTrajectory& trajectory) {
    if (trajectory.values.empty()) throw std::invalid_argument("empty trajectory");
    return trajectory.values.back();
}

}  // namespace transposer
