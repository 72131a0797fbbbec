#include "transposer/nullctrl.hpp"

#include <cmath>
#include <stdexcept>

namespace transposer {

void NullControlProblem::validate() const {
    if (basis.modes < 1) throw std::invalid_argument("null-control problem needs modes >= 1");
    if (chaos_degree < 1) throw std::invalid_argument("null-control problem needs M >= 1");
    if (y0.modes() != basis.modes) {
        throw std::invalid_argument("null-control data must carry one coefficient per mode");
    }
}

CatalogPtr NullControlProblem::catalog() const {
    return make_catalog(partition.steps, chaos_degree);
}

namespace {

BseeProblem dual_backward_problem(const NullControlProblem& problem, ChaosRv terminal) {
    return BseeProblem{problem.partition, problem.basis, problem.chaos_degree, ZeroDriver{},
                       std::move(terminal)};
}

double functional_from_solution(const SolutionPair& solution,
                                const NullControlProblem& problem) {
    const double tau = problem.partition.dt();
    double quad = 0.5 * solution.a.norm_sq(tau);
    const std::vector<double> z0 = solution.a.slot_value(0).mean();
    double lin = 0.0;
    for (int m = 0; m < problem.basis.modes; ++m) lin += problem.y0.values[m] * z0[m];
    return quad + lin;
}

}  // namespace

double functional_J(const ChaosRv& z_terminal, const NullControlProblem& problem) {
    problem.validate();
    if (z_terminal.max_nonzero_degree() > problem.chaos_degree) {
        throw std::invalid_argument("terminal datum exceeds the chaos order");
    }
    const SolutionPair solution = solve_linear(dual_backward_problem(problem, z_terminal));
    return functional_from_solution(solution, problem);
}

AssembledFunctional assemble_functional(const NullControlProblem& problem) {
    problem.validate();
    const CatalogPtr cat = problem.catalog();
    const int n = problem.basis.modes;
    const int dim = cat->dim();
    const int total = n * dim;
    const double tau = problem.partition.dt();
    const int N = problem.partition.steps;

    // Cache the per-basis-element backward solves in sparse flattened form:
    // one (position, value) list per element, position = (slot, mode,
    // ordinal) flattened.
    AssembledFunctional out;
    std::vector<std::vector<std::pair<int, double>>> cache(total);
    out.linear.resize(total);
    for (int m = 0; m < n; ++m) {
        for (int i = 0; i < dim; ++i) {
            const int r = m * dim + i;
            ChaosRv e(cat, n);
            e.at(m, i) = 1.0;
            const SolutionPair sol = solve_linear(dual_backward_problem(problem, e));
            for (int k = 0; k < N; ++k) {
                for (int mm = 0; mm < n; ++mm) {
                    for (int ii : cat->slot_ordinals(k)) {
                        const double v = sol.a.at(k, mm, ii);
                        if (v != 0.0) cache[r].emplace_back((k * n + mm) * dim + ii, v);
                    }
                }
            }
            const std::vector<double> z0 = sol.a.slot_value(0).mean();
            double s = 0.0;
            for (int mm = 0; mm < n; ++mm) s += problem.y0.values[mm] * z0[mm];
            out.linear(r) = s;
        }
    }

    out.Q.resize(total, total);
    for (int r = 0; r < total; ++r) {
        for (int c = 0; c < total; ++c) {
            double s = 0.0;
            const auto& xr = cache[r];
            const auto& xc = cache[c];
            std::size_t a = 0, b = 0;
            while (a < xr.size() && b < xc.size()) {
                if (xr[a].first < xc[b].first) {
                    ++a;
                } else if (xr[a].first > xc[b].first) {
                    ++b;
                } else {
                    s += xr[a].second * xc[b].second;
                    ++a;
                    ++b;
                }
            }
            out.Q(r, c) = tau * s;
        }
    }
    return out;
}

MinimizeResult minimize_J(const NullControlProblem& problem, double tol, const ChaosRv* start) {
    problem.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("minimize_J needs tol > 0");
    const CatalogPtr cat = problem.catalog();
    const int n = problem.basis.modes;
    const int dim = cat->dim();
    const int total = n * dim;

    const AssembledFunctional fun = assemble_functional(problem);

    // Coordinates supported on the final increment make up ker(Q); pin them
    // to zero so the answer is the minimum-norm minimizer.
    std::vector<bool> pinned(total, false);
    for (int m = 0; m < n; ++m) {
        for (int i = 0; i < dim; ++i) {
            if (cat->index(i).support_end() > problem.partition.steps - 1 &&
                cat->index(i).order(problem.partition.steps - 1) > 0) {
                pinned[m * dim + i] = true;
            }
        }
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
    if (start) {
        if (!start->compatible_with(ChaosRv(cat, n))) {
            throw std::invalid_argument("minimize_J start shape mismatch");
        }
        for (int m = 0; m < n; ++m) {
            for (int i = 0; i < dim; ++i) x(m * dim + i) = start->at(m, i);
        }
    }
    for (int r = 0; r < total; ++r) {
        if (pinned[r]) x(r) = 0.0;
    }

    // CG on Q x = -linear restricted to the unpinned coordinates.
    Eigen::VectorXd b = -fun.linear;
    auto apply = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd w = fun.Q * v;
        for (int r = 0; r < total; ++r) {
            if (pinned[r]) w(r) = 0.0;
        }
        return w;
    };
    for (int r = 0; r < total; ++r) {
        if (pinned[r]) b(r) = 0.0;
    }

    Eigen::VectorXd r = b - apply(x);
    Eigen::VectorXd p = r;
    double rho = r.squaredNorm();
    const double stop = std::max(tol * tol, 1e-300);
    int iterations = 0;
    const int max_iterations = 4 * total + 10;
    while (rho > stop && iterations < max_iterations) {
        const Eigen::VectorXd q = apply(p);
        const double pq = p.dot(q);
        if (pq <= 0.0) break;  // exhausted the positive subspace
        const double alpha = rho / pq;
        x += alpha * p;
        r -= alpha * q;
        const double rho_next = r.squaredNorm();
        p = r + (rho_next / rho) * p;
        rho = rho_next;
        ++iterations;
    }
    if (rho > stop) {
        throw std::runtime_error("conjugate gradient stagnated; achieved gradient norm " +
                                 std::to_string(std::sqrt(rho)));
    }

    MinimizeResult result{ChaosRv(cat, n), ChaosVec(cat, n, problem.chaos_degree), {}};
    for (int m = 0; m < n; ++m) {
        for (int i = 0; i < dim; ++i) result.z_terminal.at(m, i) = x(m * dim + i);
    }
    const SolutionPair solution = solve_linear(dual_backward_problem(problem, result.z_terminal));
    result.control = solution.a;

    result.report.J_value = functional_from_solution(solution, problem);
    result.report.grad_norm = std::sqrt(rho);
    result.report.cg_iterations = iterations;
    result.report.terminal_energy = verify_null(result.control, problem);
    ChaosVec zero_control(cat, n, problem.chaos_degree);
    result.report.uncontrolled_energy = verify_null(zero_control, problem);
    return result;
}

double verify_null(const ChaosVec& control, const NullControlProblem& problem) {
    problem.validate();
    SpectralCoeffs zero_noise;
    zero_noise.values.assign(problem.basis.modes, 0.0);
    ForwardProblem fwd{problem.partition, problem.basis, problem.y0, control, zero_noise};
    const ForwardTrajectory y = solve_implicit(fwd);
    return terminal_value(y).norm_sq();
}

}  // namespace transposer
