#include "transposer/slq.hpp"

#include <cmath>
#include <stdexcept>

namespace transposer {

double SlqProblem::effective_kappa() const {
    if (kappa > 0.0) return kappa;
    const double T = partition.horizon;
    return 1.0 + T + T * T;
}

void SlqProblem::validate() const {
    if (basis.modes < 1) throw std::invalid_argument("slq problem needs at least one mode");
    if (chaos_degree < 1) throw std::invalid_argument("slq problem needs chaos degree >= 1");
    if (y0.modes() != basis.modes || sigma.modes() != basis.modes) {
        throw std::invalid_argument("slq data must carry one coefficient per mode");
    }
    if (effective_kappa() <= 1.0) throw std::invalid_argument("kappa must exceed 1");
}

double cost(const ForwardTrajectory& y, const ChaosVec& u, const Partition& partition) {
    const int N = partition.steps;
    if (y.steps() != N || u.slots() != N) throw std::invalid_argument("cost shape mismatch");
    const double tau = partition.dt();
    double state = 0.0;
    for (int k = 1; k <= N; ++k) state += y.at(k).norm_sq();
    double control = 0.0;
    for (int k = 0; k < N; ++k) control += u.slot_norm_sq(k);
    return 0.5 * tau * (state + control) + 0.5 * y.at(N).norm_sq();
}

SolutionPair adjoint_solve(const ForwardTrajectory& y, const SlqProblem& problem) {
    const int N = problem.partition.steps;
    if (y.steps() != N) throw std::invalid_argument("trajectory does not match the partition");
    const int n = problem.basis.modes;

    AffineDriver driver;
    driver.source.reserve(N);
    for (int k = 0; k < N; ++k) driver.source.push_back(y.at(k + 1));

    ChaosRv terminal = y.at(N);
    terminal.scale(-1.0);

    BseeProblem backward{problem.partition, problem.basis, problem.chaos_degree,
                         std::move(driver), std::move(terminal)};
    return solve_linear(backward);
}

double max_condition_residual(const ChaosVec& u, const ChaosVec& z, const Partition& partition) {
    if (!u.compatible_with(z)) throw std::invalid_argument("residual shape mismatch");
    ChaosVec d = u;
    d.add_scaled(z, -1.0);
    return std::sqrt(d.norm_sq(partition.dt()));
}

namespace {

ForwardTrajectory run_forward(const SlqProblem& problem, const ChaosVec& u, bool with_control) {
    ForwardProblem fwd{problem.partition, problem.basis, problem.y0, u, problem.sigma};
    if (!with_control) {
        ChaosVec zero(u.catalog_ptr(), u.modes(), u.degree_bound());
        fwd.control = zero;
    }
    return solve_implicit(fwd);
}

}  // namespace

SlqResult gradient_iterate(const SlqProblem& problem, const ChaosVec& u0,
                           const SlqOptions& options) {
    problem.validate();
    const int N = problem.partition.steps;
    if (u0.slots() != N || u0.modes() != problem.basis.modes) {
        throw std::invalid_argument("initial control does not match the problem");
    }
    const double kappa = problem.effective_kappa();

    SlqResult result;
    ChaosVec u = u0;
    for (int it = 0; it <= options.max_iter; ++it) {
        SlqIterate iterate;
        iterate.control = u;
        iterate.state = run_forward(problem, u, !options.forward_without_control);
        iterate.adjoint = adjoint_solve(iterate.state, problem);
        iterate.cost = cost(iterate.state, u, problem.partition);
        iterate.residual = max_condition_residual(u, iterate.adjoint.a, problem.partition);

        const bool done = iterate.residual < options.tol;
        const ChaosVec& z = iterate.adjoint.a;
        if (!done && it < options.max_iter) {
            // u <- (1 - 1/kappa) u + (1/kappa) z
            u.scale(1.0 - 1.0 / kappa);
            u.add_scaled(z, 1.0 / kappa);
        }
        result.iterations = it;
        if (options.keep_history || done || it == options.max_iter) {
            result.history.push_back(std::move(iterate));
        }
        if (done) {
            result.converged = true;
            break;
        }
    }
    return result;
}

SlqResult gradient_iterate(const SlqProblem& problem, const SlqOptions& options) {
    problem.validate();
    const CatalogPtr cat = make_catalog(problem.partition.steps, problem.chaos_degree,
                                        CatalogLimits{.max_slots = 1 << 12});
    ChaosVec u0(cat, problem.basis.modes, problem.chaos_degree);
    return gradient_iterate(problem, u0, options);
}

RiccatiOracle riccati_oracle(const SlqProblem& problem, int mode, int refinement) {
    problem.validate();
    if (mode < 1 || mode > problem.basis.modes) {
        throw std::invalid_argument("riccati oracle mode out of range");
    }
    const double lambda = problem.basis.eigenvalue(mode);
    const int steps = problem.partition.steps * std::max(refinement, 1);
    const double h = problem.partition.horizon / steps;

    // Backward RK4 on P' = 2 lambda P + P^2 - 1 from P(T) = 1.
    auto rhs = [lambda](double p) { return 2.0 * lambda * p + p * p - 1.0; };
    RiccatiOracle oracle;
    oracle.p.assign(steps + 1, 0.0);
    oracle.p[steps] = 1.0;
    for (int k = steps; k > 0; --k) {
        const double p = oracle.p[k];
        const double k1 = rhs(p);
        const double k2 = rhs(p - 0.5 * h * k1);
        const double k3 = rhs(p - 0.5 * h * k2);
        const double k4 = rhs(p - h * k3);
        oracle.p[k - 1] = p - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    oracle.p0 = oracle.p[0];

    // int_0^T P dt by composite Simpson on the RK4 grid (even step count).
    double integral = 0.0;
    if (steps % 2 == 0) {
        integral = oracle.p[0] + oracle.p[steps];
        for (int k = 1; k < steps; ++k) integral += (k % 2 == 1 ? 4.0 : 2.0) * oracle.p[k];
        integral *= h / 3.0;
    } else {
        integral = 0.5 * (oracle.p[0] + oracle.p[steps]);
        for (int k = 1; k < steps; ++k) integral += oracle.p[k];
        integral *= h;
    }

    const double y0 = problem.y0.values[mode - 1];
    const double sig = problem.sigma.values[mode - 1];
    oracle.optimal_cost = 0.5 * oracle.p0 * y0 * y0 + 0.5 * sig * sig * integral;
    return oracle;
}

}  // namespace transposer
