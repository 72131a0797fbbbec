#include "transposer/nullctrl.hpp"

#include "transposer/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace transposer;

namespace {

NullControlProblem one_mode_problem(int N, double y0 = 1.0, double T = 1.0) {
    NullControlProblem problem;
    problem.partition = Partition(T, N);
    problem.basis = SpectralBasis{1};
    problem.chaos_degree = 1;
    problem.y0.values = {y0};
    return problem;
}

// Continuous-time minimizer of the one-mode dual functional restricted to
// deterministic terminal data.
double continuous_minimizer(double lambda, double T, double y0) {
    return -2.0 * lambda * std::exp(-lambda * T) * y0 / (1.0 - std::exp(-2.0 * lambda * T));
}

}  // namespace

TEST_CASE("dual functional values") {
    SUBCASE("zero terminal datum") {
        NullControlProblem problem = one_mode_problem(6);
        CHECK(functional_J(ChaosRv(problem.catalog(), 1), problem) == 0.0);
    }

    SUBCASE("deterministic terminal by geometric sums") {
        const int N = 8;
        const double y0 = 0.7, zeta = -1.3;
        NullControlProblem problem = one_mode_problem(N, y0);
        ChaosRv zT(problem.catalog(), 1);
        zT.at(0, 0) = zeta;
        const double tau = 1.0 / N;
        const double lam0 = 1.0 / (1.0 + tau);
        double quad = 0.0;
        for (int k = 0; k < N; ++k) quad += std::pow(lam0, 2 * (N - k));
        const double expected = 0.5 * zeta * zeta * tau * quad + y0 * zeta * std::pow(lam0, N);
        CHECK(functional_J(zT, problem) == doctest::Approx(expected).epsilon(1e-13));
    }

    SUBCASE("random terminal against a Monte Carlo of the defining expectation") {
        const int N = 5;
        NullControlProblem problem = one_mode_problem(N, 0.4);
        ChaosRv zT(problem.catalog(), 1);
        Rng rng(31);
        for (int i = 0; i < problem.catalog()->dim(); ++i) zT.at(0, i) = 0.6 * rng.next_normal();
        const double value = functional_J(zT, problem);

        BseeProblem backward{problem.partition, problem.basis, 1, ZeroDriver{}, zT};
        const SolutionPair sol = solve_linear(backward);
        const double tau = problem.partition.dt();
        const auto est = oracles::monte_carlo(N, 200000, 0x5EED, [&](const std::vector<double>& xi) {
            double acc = 0.0;
            for (int k = 0; k < N; ++k) {
                const double zk = evaluate_sample(sol.a.slot_value(k), xi)[0];
                acc += 0.5 * tau * zk * zk;
            }
            return acc;
        });
        const double lin = problem.y0.values[0] * sol.a.slot_value(0).mean()[0];
        CHECK(std::abs(value - (est.mean + lin)) < 3.0 * est.std_error);
    }
}

TEST_CASE("assembled functional is symmetric positive semidefinite") {
    NullControlProblem problem;
    problem.partition = Partition(1.0, 6);
    problem.basis = SpectralBasis{2};
    problem.chaos_degree = 1;
    problem.y0.values = {1.0, -0.4};
    const AssembledFunctional fun = assemble_functional(problem);
    const int total = static_cast<int>(fun.Q.rows());
    for (int r = 0; r < total; ++r) {
        for (int c = 0; c < total; ++c) {
            CHECK(std::abs(fun.Q(r, c) - fun.Q(c, r)) < 1e-12);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fun.Q);
    for (int i = 0; i < total; ++i) CHECK(eig.eigenvalues()(i) > -1e-10);

    // The quadratic form reproduces the functional: J(z) = 1/2 z'Qz + l'z.
    Rng rng(9);
    ChaosRv zT(problem.catalog(), 2);
    Eigen::VectorXd flat(total);
    const int dim = problem.catalog()->dim();
    for (int m = 0; m < 2; ++m) {
        for (int i = 0; i < dim; ++i) {
            const double v = rng.next_normal();
            zT.at(m, i) = v;
            flat(m * dim + i) = v;
        }
    }
    const double via_matrix = 0.5 * flat.dot(fun.Q * flat) + fun.linear.dot(flat);
    CHECK(functional_J(zT, problem) == doctest::Approx(via_matrix).epsilon(1e-12));
}

TEST_CASE("minimization of the dual functional") {
    SUBCASE("zero initial state needs no control") {
        NullControlProblem problem = one_mode_problem(6, 0.0);
        const MinimizeResult result = minimize_J(problem);
        CHECK(result.z_terminal.norm_sq() == 0.0);
        CHECK(result.control.norm_sq(problem.partition.dt()) == 0.0);
        CHECK(result.report.terminal_energy == 0.0);
    }

    SUBCASE("deterministic data give a deterministic minimizer") {
        NullControlProblem problem = one_mode_problem(16, 1.0);
        const MinimizeResult result = minimize_J(problem, 1e-12);
        ChaosRv random_part = result.z_terminal;
        random_part.at(0, 0) = 0.0;
        CHECK(std::sqrt(random_part.norm_sq()) < 1e-8);
        CHECK(result.report.grad_norm < 1e-12);
    }

    SUBCASE("discrete minimizer approaches the continuous one at O(tau)") {
        for (int N : {16, 32, 64}) {
            NullControlProblem problem = one_mode_problem(N, 1.0);
            const MinimizeResult result = minimize_J(problem, 1e-12);
            const double zeta = continuous_minimizer(1.0, 1.0, 1.0);
            const double gap = std::abs(result.z_terminal.at(0, 0) - zeta) / std::abs(zeta);
            CHECK(gap <= 10.0 / N);
        }
    }

    SUBCASE("minimizer is independent of the start") {
        NullControlProblem problem = one_mode_problem(10, -0.8);
        const MinimizeResult from_zero = minimize_J(problem, 1e-13);
        ChaosRv start(problem.catalog(), 1);
        Rng rng(123);
        for (int i = 0; i < problem.catalog()->dim(); ++i) start.at(0, i) = rng.next_normal();
        const MinimizeResult from_random = minimize_J(problem, 1e-13, &start);
        ChaosRv diff = from_zero.z_terminal;
        diff.add_scaled(from_random.z_terminal, -1.0);
        CHECK(std::sqrt(diff.norm_sq()) < 1e-11);
    }

    SUBCASE("second differences increase away from the minimizer") {
        NullControlProblem problem = one_mode_problem(8, 0.9);
        const MinimizeResult result = minimize_J(problem, 1e-13);
        const double j0 = functional_J(result.z_terminal, problem);
        const CatalogPtr cat = problem.catalog();
        const double eps = 1e-3;
        for (int i = 0; i < cat->dim(); ++i) {
            ChaosRv up = result.z_terminal;
            up.at(0, i) += eps;
            ChaosRv down = result.z_terminal;
            down.at(0, i) -= eps;
            const double second =
                functional_J(up, problem) + functional_J(down, problem) - 2.0 * j0;
            // Directions supported on the final increment are flat (they
            // never enter the piecewise-constant solution); all others curve
            // upward.
            if (cat->index(i).order(problem.partition.steps - 1) > 0) {
                CHECK(std::abs(second) < 1e-14);
            } else {
                CHECK(second > 1e-8);
            }
            CHECK(functional_J(up, problem) >= j0 - 1e-14);
            CHECK(functional_J(down, problem) >= j0 - 1e-14);
        }
    }
}

TEST_CASE("null steering") {
    SUBCASE("uncontrolled terminal energy follows the geometric decay") {
        const int N = 12;
        NullControlProblem problem = one_mode_problem(N, 1.0);
        ChaosVec zero(problem.catalog(), 1, 1);
        const double lam0 = 1.0 / (1.0 + 1.0 / N);
        CHECK(verify_null(zero, problem) == doctest::Approx(std::pow(lam0, 2 * N)).epsilon(1e-12));
    }

    SUBCASE("zero initial state stays at zero") {
        NullControlProblem problem = one_mode_problem(6, 0.0);
        ChaosVec zero(problem.catalog(), 1, 1);
        CHECK(verify_null(zero, problem) == 0.0);
    }

    SUBCASE("the computed control steers far below the uncontrolled energy") {
        NullControlProblem problem;
        problem.partition = Partition(1.0, 16);
        problem.basis = SpectralBasis{3};
        problem.chaos_degree = 1;
        problem.y0.values = {1.0, 0.5, -0.25};
        const MinimizeResult result = minimize_J(problem, 1e-12);
        CHECK(result.report.uncontrolled_energy > 0.0);
        CHECK(result.report.terminal_energy < 1e-8 * result.report.uncontrolled_energy);
    }
}
