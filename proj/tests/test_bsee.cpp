#include "transposer/bsee.hpp"

#include "transposer/instances.hpp"
#include "transposer/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace transposer;

namespace {

// Independent straight-line re-solve of the backward recursion in its
// conditional-expectation form: resolvent powers and explicit slot sums,
// with masks and the correction update coded inline. Iterated to a fixed
// point because the slot-k driver value involves the slot-k unknown.
std::pair<std::vector<ChaosRv>, std::vector<ChaosRv>> reference_recursion(
    const BseeProblem& problem) {
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const double tau = problem.partition.dt();
    const CatalogPtr cat = problem.catalog();
    const int dim = cat->dim();
    std::vector<double> lam(n);
    for (int m = 0; m < n; ++m) lam[m] = problem.basis.eigenvalue(m + 1);

    const auto* affine = std::get_if<AffineDriver>(&problem.driver);

    auto mask = [&](const ChaosRv& v, int k) {
        ChaosRv out = v;
        for (int m = 0; m < n; ++m) {
            for (int i = 0; i < dim; ++i) {
                if (cat->index(i).support_end() > k) out.at(m, i) = 0.0;
            }
        }
        return out;
    };

    std::vector<ChaosRv> a(N + 1, ChaosRv(cat, n)), b(N, ChaosRv(cat, n));
    a[N] = problem.terminal;

    for (int sweep = 0; sweep < 200; ++sweep) {
        double change = 0.0;
        // Corrections from the current a by the definition
        // b_k = E( (Delta_{k+1}W / tau) a_{k+1} | F_{t_k} ).
        for (int k = 0; k < N; ++k) {
            ChaosRv fresh(cat, n);
            for (int m = 0; m < n; ++m) {
                for (int i = 0; i < dim; ++i) {
                    const double c = a[k + 1].at(m, i);
                    if (c == 0.0) continue;
                    const MultiIndex& idx = cat->index(i);
                    if (idx.order(k) == 1 && idx.support_end() == k + 1) {
                        fresh.at(m, cat->find(idx.lowered(k))) += c / std::sqrt(tau);
                    }
                }
            }
            b[k] = std::move(fresh);
        }
        // Driver values at the current iterate.
        std::vector<ChaosRv> g(N, ChaosRv(cat, n));
        if (affine) {
            for (int l = 0; l < N; ++l) {
                for (int i = 0; i < dim; ++i) {
                    for (int m = 0; m < n; ++m) {
                        double v = 0.0;
                        if (affine->state_gain.size() > 0) {
                            for (int j = 0; j < n; ++j) {
                                v += affine->state_gain(m, j) * a[l].at(j, i);
                            }
                        }
                        if (affine->corr_gain.size() > 0) {
                            for (int j = 0; j < n; ++j) {
                                v += affine->corr_gain(m, j) * b[l].at(j, i);
                            }
                        }
                        g[l].at(m, i) = v;
                    }
                }
                if (!affine->source.empty()) g[l].add_scaled(affine->source[l], 1.0);
            }
        }
        // a_k from the terminal and the driver tail, resolvent powers
        // applied per mode.
        for (int k = N - 1; k >= 0; --k) {
            ChaosRv fresh = mask(problem.terminal, k);
            for (int m = 0; m < n; ++m) {
                const double lam0 = 1.0 / (1.0 + lam[m] * tau);
                const double power = std::pow(lam0, N - k);
                for (int i = 0; i < dim; ++i) fresh.at(m, i) *= power;
            }
            for (int l = k; l < N; ++l) {
                const ChaosRv gm = mask(g[l], k);
                for (int m = 0; m < n; ++m) {
                    const double lam0 = 1.0 / (1.0 + lam[m] * tau);
                    const double power = std::pow(lam0, l - k + 1);
                    for (int i = 0; i < dim; ++i) {
                        fresh.at(m, i) -= tau * power * gm.at(m, i);
                    }
                }
            }
            ChaosRv delta = fresh;
            delta.add_scaled(a[k], -1.0);
            change += delta.norm_sq();
            a[k] = std::move(fresh);
        }
        if (std::sqrt(change) < 1e-15) break;
    }
    a.pop_back();
    return {std::move(a), std::move(b)};
}

BseeProblem random_affine_problem(std::uint64_t seed, int N, int n, int M, double horizon = 1.0) {
    Rng rng(seed);
    const CatalogPtr cat = make_catalog(N, M);
    ChaosRv terminal(cat, n);
    for (int m = 0; m < n; ++m) {
        for (int i = 0; i < cat->dim(); ++i) terminal.at(m, i) = 0.5 * rng.next_normal();
    }
    AffineDriver driver;
    driver.state_gain = Eigen::MatrixXd(n, n);
    driver.corr_gain = Eigen::MatrixXd(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            driver.state_gain(r, c) = 0.3 * rng.next_normal();
            driver.corr_gain(r, c) = 0.3 * rng.next_normal();
        }
    }
    driver.source.reserve(N);
    for (int k = 0; k < N; ++k) {
        ChaosRv s(cat, n);
        for (int m = 0; m < n; ++m) {
            for (int i : cat->slot_ordinals(std::min(k + 1, N))) {
                s.at(m, i) = 0.4 * rng.next_normal();
            }
        }
        driver.source.push_back(std::move(s));
    }
    return BseeProblem{Partition(horizon, N), SpectralBasis{n}, M, std::move(driver),
                       std::move(terminal)};
}

}  // namespace

TEST_CASE("implicit resolvent entries") {
    CHECK(lambda0(SpectralBasis{1}, 0.5)(0) == doctest::Approx(2.0 / 3.0));
    CHECK(lambda0(SpectralBasis{1}, 1e-12)(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(lambda0(SpectralBasis{2}, 0.25)(1) == doctest::Approx(0.5));
    for (double tau : {1e-3, 0.1, 1.0}) {
        const Eigen::VectorXd d = lambda0(SpectralBasis{5}, tau);
        for (int i = 0; i < 5; ++i) {
            CHECK(d(i) > 0.0);
            CHECK(d(i) < 1.0 + 1e-15);
        }
    }
}

TEST_CASE("linear solve basics") {
    SUBCASE("zero terminal, zero driver") {
        const CatalogPtr cat = make_catalog(4, 1);
        BseeProblem problem{Partition(1.0, 4), SpectralBasis{2}, 1, ZeroDriver{}, ChaosRv(cat, 2)};
        const SolutionPair sol = solve_linear(problem);
        CHECK(sol.a.norm_sq(0.25) == 0.0);
        CHECK(sol.b.norm_sq(0.25) == 0.0);
    }

    SUBCASE("single implicit step by hand") {
        const CatalogPtr cat = make_catalog(1, 1);
        ChaosRv terminal(cat, 1);
        terminal.at(0, 0) = 1.0;
        BseeProblem problem{Partition(1.0, 1), SpectralBasis{1}, 1, ZeroDriver{}, terminal};
        const SolutionPair sol = solve_linear(problem);
        CHECK(sol.a.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));  // 1/(1+tau), tau=1
        CHECK(sol.b.slot_norm_sq(0) == 0.0);
    }

    SUBCASE("Brownian terminal closed form") {
        const int N = 16;
        const TimeRateInstance instance = brownian_terminal_instance();
        const BseeProblem problem = instance.problem(N);
        const SolutionPair sol = solve_linear(problem);
        const double tau = 1.0 / N;
        const double lam0 = 1.0 / (1.0 + tau);
        const CatalogPtr cat = problem.catalog();
        for (int k = 0; k < N; ++k) {
            for (int j = 0; j < N; ++j) {
                const double expected = j < k ? std::pow(lam0, N - k) * std::sqrt(tau) : 0.0;
                CHECK(std::abs(sol.a.at(k, 0, cat->ordinal(MultiIndex().raised(j))) - expected) <
                      1e-12);
            }
            CHECK(std::abs(sol.b.at(k, 0, 0) - std::pow(lam0, N - k - 1)) < 1e-12);
            CHECK(sol.a.at(k, 0, 0) == 0.0);
        }
    }
}

TEST_CASE("linear solve is linear in terminal and source") {
    for (std::uint64_t seed : {11, 12, 13}) {
        const BseeProblem p1 = random_affine_problem(seed, 5, 2, 2);
        BseeProblem p2 = random_affine_problem(seed + 100, 5, 2, 2);
        // Same driver gains so the solution map is linear in (terminal, f).
        std::get<AffineDriver>(p2.driver).state_gain =
            std::get<AffineDriver>(p1.driver).state_gain;
        std::get<AffineDriver>(p2.driver).corr_gain = std::get<AffineDriver>(p1.driver).corr_gain;

        BseeProblem combo = p1;
        combo.terminal.add_scaled(p2.terminal, -2.5);
        auto& src = std::get<AffineDriver>(combo.driver).source;
        const auto& src2 = std::get<AffineDriver>(p2.driver).source;
        for (int k = 0; k < 5; ++k) src[k].add_scaled(src2[k], -2.5);

        const SolutionPair s1 = solve_linear(p1);
        const SolutionPair s2 = solve_linear(p2);
        const SolutionPair sc = solve_linear(combo);
        ChaosVec expect_a = s1.a;
        expect_a.add_scaled(s2.a, -2.5);
        expect_a.add_scaled(sc.a, -1.0);
        ChaosVec expect_b = s1.b;
        expect_b.add_scaled(s2.b, -2.5);
        expect_b.add_scaled(sc.b, -1.0);
        CHECK(std::sqrt(expect_a.norm_sq(0.2)) < 1e-12);
        CHECK(std::sqrt(expect_b.norm_sq(0.2)) < 1e-12);
    }
}

TEST_CASE("linear solve equals the conditional-expectation recursion") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const BseeProblem problem = random_affine_problem(1000 + seed, 4, 2, 2);
        const SolutionPair sol = solve_linear(problem);
        const auto [ref_a, ref_b] = reference_recursion(problem);
        const CatalogPtr cat = problem.catalog();
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) {
            for (int m = 0; m < 2; ++m) {
                for (int i = 0; i < cat->dim(); ++i) {
                    worst = std::max(worst, std::abs(sol.a.at(k, m, i) - ref_a[k].at(m, i)));
                    worst = std::max(worst, std::abs(sol.b.at(k, m, i) - ref_b[k].at(m, i)));
                }
            }
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("adaptedness and degree law hold on random solves") {
    const BseeProblem problem = random_affine_problem(77, 6, 2, 2);
    const SolutionPair sol = solve_linear(problem);
    const CatalogPtr cat = problem.catalog();
    for (int k = 0; k < 6; ++k) {
        for (int m = 0; m < 2; ++m) {
            for (int i = 0; i < cat->dim(); ++i) {
                if (cat->index(i).support_end() > k) {
                    CHECK(sol.a.at(k, m, i) == 0.0);
                    CHECK(sol.b.at(k, m, i) == 0.0);
                }
                if (cat->degree(i) > 1) CHECK(sol.b.at(k, m, i) == 0.0);
            }
        }
    }
}

TEST_CASE("test process propagation") {
    const int N = 3;
    const Partition part(1.0, N);
    const double tau = part.dt();
    const SpectralBasis basis{2};
    const CatalogPtr cat = make_catalog(N, 2);

    SUBCASE("zero inputs give the zero process") {
        ChaosVec v1(cat, 2, 2), v2(cat, 2, 1);
        const ChaosVec x = test_process(v1, v2, basis, part);
        CHECK(x.norm_sq(tau) == 0.0);
    }

    SUBCASE("v1 basis element: resolvent powers from its slot onward") {
        // Hand expectation: the slot-k source enters inside the resolvent,
        // then each later step multiplies by it again.
        for (int k = 0; k < N; ++k) {
            for (int mode = 0; mode < 2; ++mode) {
                ChaosVec v1(cat, 2, 2), v2(cat, 2, 1);
                const int ord = cat->ordinal(MultiIndex());  // constant element
                v1.at(k, mode, ord) = 1.0 / std::sqrt(tau);
                const ChaosVec x = test_process(v1, v2, basis, part);
                const double lam0 = 1.0 / (1.0 + basis.eigenvalue(mode + 1) * tau);
                for (int l = 0; l < N; ++l) {
                    const double expected =
                        l >= k ? std::pow(lam0, l - k + 1) * std::sqrt(tau) : 0.0;
                    CHECK(x.at(l, mode, ord) == doctest::Approx(expected).epsilon(1e-14));
                    for (int m2 = 0; m2 < 2; ++m2) {
                        for (int i = 0; i < cat->dim(); ++i) {
                            if (m2 == mode && i == ord) continue;
                            CHECK(x.at(l, m2, i) == 0.0);
                        }
                    }
                }
            }
        }
    }

    SUBCASE("v2 basis element: increment-multiplied and propagated") {
        const int k = 1;
        ChaosVec v1(cat, 2, 2), v2(cat, 2, 1);
        v2.at(k, 0, cat->ordinal(MultiIndex())) = 1.0 / std::sqrt(tau);
        const ChaosVec x = test_process(v1, v2, basis, part);
        const double lam0 = 1.0 / (1.0 + basis.eigenvalue(1) * tau);
        // Delta_{k+1}W / sqrt(tau) on the constant is the slot-k H_1 element.
        const int h1 = cat->ordinal(MultiIndex().raised(k));
        CHECK(x.slot_norm_sq(0) == 0.0);
        CHECK(x.slot_norm_sq(1) == 0.0);
        CHECK(x.at(2, 0, h1) == doctest::Approx(lam0).epsilon(1e-14));

        // An order-one v2 element picks up both ladder neighbours.
        ChaosVec w2(cat, 2, 1);
        w2.at(k, 0, h1) = 1.0 / std::sqrt(tau);
        const ChaosVec y = test_process(v1, w2, basis, part);
        CHECK(y.at(2, 0, cat->ordinal(MultiIndex())) == doctest::Approx(lam0).epsilon(1e-14));
        const MultiIndex two = MultiIndex().raised(k).raised(k);
        CHECK(y.at(2, 0, cat->ordinal(two)) ==
              doctest::Approx(lam0 * std::sqrt(2.0)).epsilon(1e-14));
    }
}

TEST_CASE("variational residual") {
    SUBCASE("zero problem, zero solution") {
        const CatalogPtr cat = make_catalog(3, 1);
        BseeProblem problem{Partition(1.0, 3), SpectralBasis{1}, 1, ZeroDriver{}, ChaosRv(cat, 1)};
        const SolutionPair sol = solve_linear(problem);
        CHECK(variational_residual(sol, problem) == 0.0);
    }

    SUBCASE("solver outputs satisfy the identity") {
        const TimeRateInstance instance = brownian_terminal_instance();
        const BseeProblem problem = instance.problem(8);
        CHECK(variational_residual(solve_linear(problem), problem) < 1e-10);

        const BseeProblem affine = random_affine_problem(5, 5, 2, 2);
        CHECK(variational_residual(solve_linear(affine), affine) < 1e-10);
    }

    SUBCASE("a perturbed coefficient is detected") {
        const BseeProblem problem = random_affine_problem(9, 4, 1, 1);
        SolutionPair sol = solve_linear(problem);
        const double tau = problem.partition.dt();
        const double before = variational_residual(sol, problem);
        sol.a.at(2, 0, 0) += 0.1;
        const double after = variational_residual(sol, problem);
        const double lam0 = 1.0 / (1.0 + tau);
        CHECK(after >= 0.1 * std::sqrt(tau) * (1.0 - lam0));
        CHECK(after > 100.0 * std::max(before, 1e-14));
    }
}

TEST_CASE("picard iteration") {
    SUBCASE("an affine driver in lipschitz clothing matches solve_linear") {
        BseeProblem problem = random_affine_problem(21, 4, 2, 2);
        // Deterministic source so the pathwise wrapper can reproduce it.
        auto& affine = std::get<AffineDriver>(problem.driver);
        std::vector<std::vector<double>> source_means(4);
        for (int k = 0; k < 4; ++k) {
            ChaosRv deterministic(problem.catalog(), 2);
            deterministic.at(0, 0) = affine.source[k].at(0, 0);
            deterministic.at(1, 0) = affine.source[k].at(1, 0);
            affine.source[k] = deterministic;
            source_means[k] = {deterministic.at(0, 0), deterministic.at(1, 0)};
        }
        const SolutionPair linear = solve_linear(problem);

        const Eigen::MatrixXd La = affine.state_gain;
        const Eigen::MatrixXd Lb = affine.corr_gain;
        const Partition part = problem.partition;
        BseeProblem lipschitz = problem;
        LipschitzDriver driver;
        driver.lipschitz = La.norm() + Lb.norm();
        driver.f = [La, Lb, source_means, part](double t, std::span<const double> a,
                                                std::span<const double> b) {
            std::vector<double> out(a.size(), 0.0);
            const int slot = std::max(part.slot(t) - 1, 0);  // t is the right endpoint mu
            for (int m = 0; m < static_cast<int>(a.size()); ++m) {
                for (int j = 0; j < static_cast<int>(a.size()); ++j) {
                    out[m] += La(m, j) * a[j] + Lb(m, j) * b[j];
                }
                out[m] += source_means[slot][m];
            }
            return out;
        };
        lipschitz.driver = std::move(driver);

        PicardOptions options;
        options.tol = 1e-12;
        const SolutionPair picard = solve_picard(lipschitz, options);
        CHECK(picard.diagnostics.converged);
        ChaosVec da = picard.a;
        da.add_scaled(linear.a, -1.0);
        ChaosVec db = picard.b;
        db.add_scaled(linear.b, -1.0);
        CHECK(std::sqrt(da.norm_sq(part.dt()) + db.norm_sq(part.dt())) < 1e-10);
    }

    SUBCASE("sin driver with zero terminal stays at zero") {
        const CatalogPtr cat = make_catalog(4, 1);
        LipschitzDriver driver;
        driver.lipschitz = 1.0;
        driver.f = [](double, std::span<const double> a, std::span<const double>) {
            return std::vector<double>{std::sin(a[0])};
        };
        BseeProblem problem{Partition(1.0, 4), SpectralBasis{1}, 1, std::move(driver),
                            ChaosRv(cat, 1)};
        const SolutionPair sol = solve_picard(problem, {});
        CHECK(sol.a.norm_sq(0.25) == 0.0);
        CHECK(sol.b.norm_sq(0.25) == 0.0);
    }

    SUBCASE("contraction guard rejects tau L >= 1/2") {
        const CatalogPtr cat = make_catalog(2, 1);
        LipschitzDriver driver;
        driver.lipschitz = 2.0;
        driver.f = [](double, std::span<const double> a, std::span<const double>) {
            return std::vector<double>{2.0 * a[0]};
        };
        BseeProblem problem{Partition(1.0, 2), SpectralBasis{1}, 1, std::move(driver),
                            ChaosRv(cat, 1)};
        CHECK_THROWS_WITH_AS(solve_picard(problem, {}), doctest::Contains("decrease tau"),
                             std::invalid_argument);
    }

    SUBCASE("implicit and explicit schemes both satisfy their identities") {
        const TimeRateInstance imp = sin_driver_instance(1.0, 0.5, PicardScheme::implicit_step);
        const TimeRateInstance exp = sin_driver_instance(1.0, 0.5, PicardScheme::explicit_step);
        const BseeProblem pi = imp.problem(6);
        const BseeProblem pe = exp.problem(6);
        const SolutionPair si = solve_instance(imp, 6);
        const SolutionPair se = solve_instance(exp, 6);
        CHECK(variational_residual(si, pi) < 1e-8);
        CHECK(variational_residual(se, pe) < 1e-8);
        // The schemes differ at finite tau.
        ChaosVec d = si.a;
        d.add_scaled(se.a, -1.0);
        CHECK(d.norm_sq(pi.partition.dt()) > 1e-12);
    }
}

TEST_CASE("error measurement") {
    SUBCASE("a solution against itself vanishes") {
        const TimeRateInstance instance = brownian_terminal_instance();
        const BseeProblem problem = instance.problem(8);
        const SolutionPair sol = solve_linear(problem);
        const PathwiseReference self = solution_as_reference(sol, problem);
        ErrorOptions options;
        options.paths = 500;
        options.substeps = 2;
        const ErrorNorms norms = error_vs_reference(sol, problem, self, options);
        CHECK(norms.a_sup_sq < 1e-25);
        CHECK(norms.b_l2_sq < 1e-25);
    }

    SUBCASE("closed-form errors decrease when N doubles") {
        const TimeRateInstance instance = brownian_terminal_instance();
        ErrorOptions options;
        options.paths = 20000;
        double previous = 1e9;
        for (int N : {8, 16, 32}) {
            const BseeProblem problem = instance.problem(N);
            const SolutionPair sol = solve_linear(problem);
            const ErrorNorms norms =
                error_vs_reference(sol, problem, instance.reference(N), options);
            const double combined = norms.combined();
            CHECK(combined > 0.0);
            CHECK(combined < 0.75 * previous);
            previous = combined;
        }
    }
}
