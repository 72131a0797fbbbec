#include "transposer/bsee.hpp"

#include "transposer/hermite.hpp"
#include "transposer/parallel.hpp"
#include "transposer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace transposer {

namespace {

double dot(const ChaosRv& x, const ChaosRv& y) {
    double s = 0.0;
    for (int m = 0; m < x.modes(); ++m) {
        auto xm = x.mode_coeffs(m);
        auto ym = y.mode_coeffs(m);
        for (std::size_t i = 0; i < xm.size(); ++i) s += xm[i] * ym[i];
    }
    return s;
}

void mask_to_slot(ChaosRv& v, int k) {
    const ChaosCatalog& cat = v.catalog();
    const auto& keep = cat.slot_ordinals(k);
    for (int m = 0; m < v.modes(); ++m) {
        auto c = v.mode_coeffs(m);
        std::size_t kept = 0;
        for (int i = 0; i < cat.dim(); ++i) {
            if (kept < keep.size() && keep[kept] == i) {
                ++kept;
            } else {
                c[i] = 0.0;
            }
        }
    }
}

void apply_diag(ChaosRv& v, const Eigen::VectorXd& d) {
    for (int m = 0; m < v.modes(); ++m) {
        auto c = v.mode_coeffs(m);
        for (double& x : c) x *= d(m);
    }
}

// E( (Delta_{k+1}W / tau) v | F_{t_k} ): only the annihilation branch of the
// slot-k increment survives the conditioning, and only on indices whose
// slot-k entry was exactly one with no support beyond it.
ChaosRv scaled_increment_projection(const ChaosRv& v, int k, double tau) {
    const ChaosCatalog& cat = v.catalog();
    ChaosRv out(v.catalog_ptr(), v.modes());
    const double scale = 1.0 / std::sqrt(tau);
    for (int m = 0; m < v.modes(); ++m) {
        auto src = v.mode_coeffs(m);
        auto dst = out.mode_coeffs(m);
        for (int i : cat.slot_ordinals(k + 1)) {
            const double c = src[i];
            if (c == 0.0) continue;
            const MultiIndex& idx = cat.index(i);
            if (idx.order(k) == 1 && idx.support_end() == k + 1) {
                dst[cat.lowered(i, k)] += scale * c;
            }
        }
    }
    return out;
}

std::vector<int> nonzero_support_slots(const ChaosRv& v) {
    const ChaosCatalog& cat = v.catalog();
    std::set<int> slots;
    for (int m = 0; m < v.modes(); ++m) {
        auto c = v.mode_coeffs(m);
        for (int i = 0; i < cat.dim(); ++i) {
            if (c[i] == 0.0) continue;
            const auto& entries = cat.index(i).entries();
            for (std::size_t j = 0; j < entries.size(); ++j) {
                if (entries[j] > 0) slots.insert(static_cast<int>(j));
            }
        }
    }
    return {slots.begin(), slots.end()};
}

Eigen::MatrixXd zero_matrix(int n) { return Eigen::MatrixXd::Zero(n, n); }

}  // namespace

void BseeProblem::validate() const {
    const int n = basis.modes;
    if (n < 1) throw std::invalid_argument("problem needs at least one spectral mode");
    if (chaos_degree < 1) throw std::invalid_argument("chaos order M must be at least 1");
    if (!terminal.catalog_ptr()) throw std::invalid_argument("problem needs a terminal datum");
    if (terminal.modes() != n) {
        throw std::invalid_argument("terminal mode count does not match the spectral basis");
    }
    if (terminal.catalog().slots() != partition.steps) {
        throw std::invalid_argument("terminal catalog slots do not match the partition");
    }
    if (terminal.catalog().max_degree() != chaos_degree) {
        throw std::invalid_argument("terminal catalog degree does not match the chaos order");
    }
    if (terminal.max_nonzero_degree() > chaos_degree) {
        throw std::invalid_argument("terminal datum exceeds the chaos order");
    }
    if (const auto* affine = std::get_if<AffineDriver>(&driver)) {
        if (affine->state_gain.size() > 0 &&
            (affine->state_gain.rows() != n || affine->state_gain.cols() != n)) {
            throw std::invalid_argument("affine driver La must be n x n");
        }
        if (affine->corr_gain.size() > 0 &&
            (affine->corr_gain.rows() != n || affine->corr_gain.cols() != n)) {
            throw std::invalid_argument("affine driver Lb must be n x n");
        }
        if (!affine->source.empty() &&
            static_cast<int>(affine->source.size()) != partition.steps) {
            throw std::invalid_argument("affine driver source must carry one value per slot");
        }
        for (const auto& s : affine->source) {
            if (!affine->source.empty() && !s.compatible_with(terminal)) {
                throw std::invalid_argument("affine driver source shape mismatch");
            }
        }
    }
    if (const auto* lip = std::get_if<LipschitzDriver>(&driver)) {
        if (!(lip->lipschitz > 0.0)) {
            throw std::invalid_argument("lipschitz driver must declare a positive constant");
        }
        if (!lip->f) throw std::invalid_argument("lipschitz driver must be callable");
    }
}

Eigen::VectorXd lambda0(const SpectralBasis& basis, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("lambda0 needs tau > 0");
    Eigen::VectorXd d(basis.modes);
    for (int i = 1; i <= basis.modes; ++i) d(i - 1) = 1.0 / (1.0 + basis.eigenvalue(i) * tau);
    return d;
}

SolutionPair solve_linear(const BseeProblem& problem) {
    problem.validate();
    if (std::holds_alternative<LipschitzDriver>(problem.driver)) {
        throw std::invalid_argument("solve_linear handles zero or affine drivers only");
    }
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const int M = problem.chaos_degree;
    const double tau = problem.partition.dt();
    const CatalogPtr cat = problem.catalog();
    const Eigen::VectorXd resolvent = lambda0(problem.basis, tau);

    const auto* affine = std::get_if<AffineDriver>(&problem.driver);
    const bool has_gain = affine && affine->state_gain.size() > 0;
    const bool has_corr = affine && affine->corr_gain.size() > 0;
    const bool has_source = affine && !affine->source.empty();

    // Implicit step matrix (I - Lambda_n tau) + tau La = diag(1 + lambda tau) + tau La.
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) step(i, i) = 1.0 / resolvent(i);
    if (has_gain) step += tau * affine->state_gain;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(step);
    if (!lu.isInvertible()) {
        throw std::runtime_error("implicit step matrix is singular; reduce tau or the driver gain");
    }

    SolutionPair out{ChaosVec(cat, n, M), ChaosVec(cat, n, std::max(M - 1, 0)), {}};
    ChaosRv a_next = problem.terminal;

    for (int k = N - 1; k >= 0; --k) {
        ChaosRv b_k = scaled_increment_projection(a_next, k, tau);
        ChaosRv rhs = a_next;
        if (has_source) rhs.add_scaled(affine->source[k], -tau);
        mask_to_slot(rhs, k);
        if (has_corr) {
            // rhs -= tau * Lb b_k, done per active ordinal.
            for (int i : cat->slot_ordinals(k)) {
                Eigen::VectorXd bi(n);
                for (int m = 0; m < n; ++m) bi(m) = b_k.at(m, i);
                const Eigen::VectorXd corr = affine->corr_gain * bi;
                for (int m = 0; m < n; ++m) rhs.at(m, i) -= tau * corr(m);
            }
        }

        ChaosRv a_k(cat, n);
        if (has_gain) {
            for (int i : cat->slot_ordinals(k)) {
                Eigen::VectorXd ri(n);
                for (int m = 0; m < n; ++m) ri(m) = rhs.at(m, i);
                const Eigen::VectorXd ai = lu.solve(ri);
                for (int m = 0; m < n; ++m) a_k.at(m, i) = ai(m);
            }
        } else {
            a_k = rhs;
            apply_diag(a_k, resolvent);
        }

        out.a.set_slot_value(k, a_k);
        out.b.set_slot_value(k, b_k);
        a_next = std::move(a_k);
    }

    out.diagnostics = {N, 0.0, "linear", true};
    return out;
}

namespace {

// When the driver arguments are (jointly Gaussian) degree-one chaos elements
// and M = 1, the projection collapses: f depends on the increments only
// through at most 2n linear functionals, so after an orthonormal rotation a
// Gauss-Hermite rule over those directions gives every coefficient,
//   c_0 = E f,   c_{e_j} = sum_s q_s[j] E[f eta_s],
// regardless of how many increments the arguments load on.
std::optional<ChaosRv> project_gaussian_args(const LipschitzDriver& driver, double t_right,
                                             const ChaosRv& a_val, const ChaosRv& b_val) {
    const ChaosCatalog& cat = a_val.catalog();
    if (cat.max_degree() != 1) return std::nullopt;
    if (a_val.max_nonzero_degree() > 1 || b_val.max_nonzero_degree() > 1) return std::nullopt;
    const int n = a_val.modes();
    const int N = cat.slots();

    // Degree-one loadings, one column per (argument, mode).
    std::vector<int> slot_ordinal(N);
    for (int j = 0; j < N; ++j) slot_ordinal[j] = cat.ordinal(MultiIndex().raised(j));
    Eigen::MatrixXd loadings(N, 2 * n);
    Eigen::VectorXd mean_a(n), mean_b(n);
    for (int m = 0; m < n; ++m) {
        mean_a(m) = a_val.at(m, 0);
        mean_b(m) = b_val.at(m, 0);
        for (int j = 0; j < N; ++j) {
            loadings(j, m) = a_val.at(m, slot_ordinal[j]);
            loadings(j, n + m) = b_val.at(m, slot_ordinal[j]);
        }
    }

    // Orthonormal directions spanning the loadings (modified Gram-Schmidt).
    const double drop = 1e-13 * std::max(1.0, loadings.norm());
    std::vector<Eigen::VectorXd> q;
    for (int c = 0; c < 2 * n; ++c) {
        Eigen::VectorXd v = loadings.col(c);
        for (const auto& qs : q) v -= qs.dot(v) * qs;
        const double norm = v.norm();
        if (norm > drop) q.push_back(v / norm);
    }
    const int r = static_cast<int>(q.size());
    if (r > 3) return std::nullopt;  // fall back to the generic backends

    Eigen::MatrixXd ra(n, r), rb(n, r);
    for (int m = 0; m < n; ++m) {
        for (int s = 0; s < r; ++s) {
            ra(m, s) = q[s].dot(loadings.col(m));
            rb(m, s) = q[s].dot(loadings.col(n + m));
        }
    }

    const GaussHermiteRule rule = gauss_hermite(24);
    const int Q = static_cast<int>(rule.nodes.size());
    Eigen::VectorXd c0 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd cdir = Eigen::MatrixXd::Zero(n, r);
    std::vector<int> odo(r, 0);
    std::vector<double> av(n), bv(n);
    for (;;) {
        double w = 1.0;
        for (int s = 0; s < r; ++s) w *= rule.weights[odo[s]];
        for (int m = 0; m < n; ++m) {
            double va = mean_a(m), vb = mean_b(m);
            for (int s = 0; s < r; ++s) {
                va += ra(m, s) * rule.nodes[odo[s]];
                vb += rb(m, s) * rule.nodes[odo[s]];
            }
            av[m] = va;
            bv[m] = vb;
        }
        const std::vector<double> fv = driver.f(t_right, av, bv);
        for (int m = 0; m < n; ++m) {
            c0(m) += w * fv[m];
            for (int s = 0; s < r; ++s) cdir(m, s) += w * fv[m] * rule.nodes[odo[s]];
        }
        int pos = r - 1;
        while (pos >= 0 && ++odo[pos] == Q) odo[pos--] = 0;
        if (pos < 0) break;
    }

    ChaosRv out(a_val.catalog_ptr(), n);
    for (int m = 0; m < n; ++m) {
        out.at(m, 0) = c0(m);
        for (int s = 0; s < r; ++s) {
            if (cdir(m, s) == 0.0) continue;
            for (int j = 0; j < N; ++j) {
                out.at(m, slot_ordinal[j]) += q[s](j) * cdir(m, s);
            }
        }
    }
    return out;
}

// Gamma_M F(t_{k+1}, a_val, b_val) through the configured projection backend,
// tensoring only over the increments those arguments actually involve.
ChaosRv project_driver(const LipschitzDriver& driver, double t_right, const ChaosRv& a_val,
                       const ChaosRv& b_val, const ProjectionSpec& spec) {
    if (auto reduced = project_gaussian_args(driver, t_right, a_val, b_val)) {
        return *std::move(reduced);
    }
    std::set<int> active_set;
    for (int j : nonzero_support_slots(a_val)) active_set.insert(j);
    for (int j : nonzero_support_slots(b_val)) active_set.insert(j);
    std::vector<int> active(active_set.begin(), active_set.end());
    auto f = [&](std::span<const double> draws) {
        const std::vector<double> av = evaluate_sample(a_val, draws);
        const std::vector<double> bv = evaluate_sample(b_val, draws);
        return driver.f(t_right, av, bv);
    };
    return gamma_project(f, a_val.modes(), a_val.catalog_ptr(), spec, active);
}

}  // namespace

SolutionPair solve_picard(const BseeProblem& problem, const PicardOptions& options) {
    problem.validate();
    const auto* driver = std::get_if<LipschitzDriver>(&problem.driver);
    if (!driver) {
        throw std::invalid_argument("solve_picard expects a lipschitz driver (wrap affine ones)");
    }
    if (!(options.tol > 0.0)) throw std::invalid_argument("picard tolerance must be positive");
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const int M = problem.chaos_degree;
    const double tau = problem.partition.dt();
    const CatalogPtr cat = problem.catalog();
    const Eigen::VectorXd resolvent = lambda0(problem.basis, tau);
    const bool implicit_scheme = options.scheme == PicardScheme::implicit_step;

    if (implicit_scheme && tau * driver->lipschitz >= 0.5) {
        throw std::invalid_argument(
            "implicit fixed point needs tau * L < 1/2; got " +
            std::to_string(tau * driver->lipschitz) + ", decrease tau to below " +
            std::to_string(0.5 / driver->lipschitz));
    }

    SolutionPair out{ChaosVec(cat, n, M), ChaosVec(cat, n, std::max(M - 1, 0)), {}};
    const double inner_tol = std::max(options.tol / 8.0, 1e-15);
    bool have_previous = false;
    double sweep_diff = 0.0;
    int sweep = 0;

    for (sweep = 1; sweep <= options.max_iter; ++sweep) {
        ChaosVec a_prev = out.a;
        ChaosVec b_prev = out.b;
        ChaosRv a_next = problem.terminal;

        for (int k = N - 1; k >= 0; --k) {
            ChaosRv b_k = scaled_increment_projection(a_next, k, tau);
            ChaosRv base = a_next;
            mask_to_slot(base, k);

            ChaosRv a_k(cat, n);
            if (implicit_scheme) {
                ChaosRv x = base;
                apply_diag(x, resolvent);
                if (have_previous) x = a_prev.slot_value(k);
                for (int it = 0; it < 200; ++it) {
                    ChaosRv g =
                        project_driver(*driver, problem.partition.time(k + 1), x, b_k,
                                       options.projection);
                    ChaosRv next = base;
                    next.add_scaled(g, -tau);
                    apply_diag(next, resolvent);
                    if (options.damping != 1.0) {
                        next.scale(options.damping);
                        next.add_scaled(x, 1.0 - options.damping);
                    }
                    ChaosRv delta = next;
                    delta.add_scaled(x, -1.0);
                    x = std::move(next);
                    if (std::sqrt(delta.norm_sq()) < inner_tol) break;
                }
                a_k = std::move(x);
            } else {
                // Explicit: F at the already-computed step-(k+1) values; the
                // last slot reads the terminal and its own correction value.
                const ChaosRv a_arg = (k + 1 < N) ? out.a.slot_value(k + 1) : problem.terminal;
                const ChaosRv b_arg = (k + 1 < N) ? out.b.slot_value(k + 1) : b_k;
                ChaosRv g = project_driver(*driver, problem.partition.time(k + 1), a_arg, b_arg,
                                           options.projection);
                mask_to_slot(g, k);
                a_k = base;
                a_k.add_scaled(g, -tau);
                apply_diag(a_k, resolvent);
            }

            out.a.set_slot_value(k, a_k);
            out.b.set_slot_value(k, b_k);
            a_next = std::move(a_k);
        }

        if (have_previous) {
            ChaosVec da = out.a;
            da.add_scaled(a_prev, -1.0);
            ChaosVec db = out.b;
            db.add_scaled(b_prev, -1.0);
            sweep_diff = std::sqrt(da.norm_sq(tau) + db.norm_sq(tau));
            if (sweep_diff < options.tol) break;
        }
        have_previous = true;
    }

    const bool converged = sweep <= options.max_iter;
    out.diagnostics = {std::min(sweep, options.max_iter), sweep_diff,
                       implicit_scheme ? "picard-implicit" : "picard-explicit", converged};
    return out;
}

ChaosVec test_process(const ChaosVec& v1, const ChaosVec& v2, const SpectralBasis& basis,
                      const Partition& partition) {
    if (!v1.compatible_with(v2)) throw std::invalid_argument("test process shape mismatch");
    if (v1.modes() != basis.modes) throw std::invalid_argument("test process mode mismatch");
    const int N = partition.steps;
    if (v1.slots() != N) throw std::invalid_argument("test process partition mismatch");
    const double tau = partition.dt();
    const Eigen::VectorXd resolvent = lambda0(basis, tau);

    ChaosVec x(v1.catalog_ptr(), v1.modes(), v1.catalog().max_degree());
    ChaosRv state = v1.slot_value(0);
    state.scale(tau);
    apply_diag(state, resolvent);
    x.set_slot_value(0, state);
    for (int k = 0; k + 1 < N; ++k) {
        ChaosRv next = state;
        ChaosRv v1_next = v1.slot_value(k + 1);
        next.add_scaled(v1_next, tau);
        ChaosRv noise = increment_multiply(v2.slot_value(k), k, tau);
        next.add_scaled(noise, 1.0);
        apply_diag(next, resolvent);
        x.set_slot_value(k + 1, next);
        state = std::move(next);
    }
    return x;
}

namespace {

// Per-slot driver values Gamma_M F(t_{l+1}, ., .) as used by the scheme that
// produced the solution.
std::vector<ChaosRv> driver_values(const SolutionPair& solution, const BseeProblem& problem,
                                   const ProjectionSpec& spec) {
    const int N = problem.partition.steps;
    std::vector<ChaosRv> g;
    g.reserve(N);
    const bool explicit_scheme = solution.diagnostics.scheme == "picard-explicit";
    for (int l = 0; l < N; ++l) {
        if (std::holds_alternative<ZeroDriver>(problem.driver)) {
            g.emplace_back(problem.catalog(), problem.basis.modes);
            continue;
        }
        if (const auto* affine = std::get_if<AffineDriver>(&problem.driver)) {
            ChaosRv value(problem.catalog(), problem.basis.modes);
            const ChaosRv a_l = solution.a.slot_value(l);
            const ChaosRv b_l = solution.b.slot_value(l);
            const int n = problem.basis.modes;
            const Eigen::MatrixXd La =
                affine->state_gain.size() > 0 ? affine->state_gain : zero_matrix(n);
            const Eigen::MatrixXd Lb =
                affine->corr_gain.size() > 0 ? affine->corr_gain : zero_matrix(n);
            for (int i = 0; i < problem.catalog()->dim(); ++i) {
                Eigen::VectorXd ai(n), bi(n);
                for (int m = 0; m < n; ++m) {
                    ai(m) = a_l.at(m, i);
                    bi(m) = b_l.at(m, i);
                }
                const Eigen::VectorXd vi = La * ai + Lb * bi;
                for (int m = 0; m < n; ++m) value.at(m, i) = vi(m);
            }
            if (!affine->source.empty()) value.add_scaled(affine->source[l], 1.0);
            g.push_back(std::move(value));
            continue;
        }
        const auto& lip = std::get<LipschitzDriver>(problem.driver);
        const ChaosRv a_arg = explicit_scheme
                                  ? (l + 1 < N ? solution.a.slot_value(l + 1) : problem.terminal)
                                  : solution.a.slot_value(l);
        const ChaosRv b_arg = explicit_scheme
                                  ? solution.b.slot_value(std::min(l + 1, N - 1))
                                  : solution.b.slot_value(l);
        g.push_back(project_driver(lip, problem.partition.time(l + 1), a_arg, b_arg, spec));
    }
    return g;
}

}  // namespace

double variational_residual(const SolutionPair& solution, const BseeProblem& problem,
                            const ProjectionSpec& projection) {
    problem.validate();
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const int M = problem.chaos_degree;
    const double tau = problem.partition.dt();
    const CatalogPtr cat = problem.catalog();
    const double root_tau = std::sqrt(tau);

    const std::vector<ChaosRv> g = driver_values(solution, problem, projection);

    double worst = 0.0;
    ChaosVec zero_vec(cat, n, M);
    for (int mode = 0; mode < n; ++mode) {
        for (int k = 0; k < N; ++k) {
            for (int i : cat->slot_ordinals(k)) {
                const int deg = cat->degree(i);
                // v1 test for every basis element of the order-M chaos at k;
                // v2 test only for the order-(M-1) part.
                for (int which = 0; which < 2; ++which) {
                    if (which == 1 && deg > M - 1) continue;
                    ChaosVec v1 = zero_vec;
                    ChaosVec v2(cat, n, std::max(M - 1, 0));
                    if (which == 0) {
                        v1.at(k, mode, i) = 1.0 / root_tau;
                    } else {
                        v2.at(k, mode, i) = 1.0 / root_tau;
                    }
                    const ChaosVec x = test_process(v1, v2, problem.basis, problem.partition);

                    // Terminal pairing value: the last slot value plus the
                    // final noise contribution, which never feeds a grid
                    // point of the path itself.
                    ChaosRv x_T = x.slot_value(N - 1);
                    if (which == 1 && k == N - 1) {
                        x_T.add_scaled(increment_multiply(v2.slot_value(N - 1), N - 1, tau), 1.0);
                    }
                    double lhs = dot(x_T, problem.terminal);
                    double rhs = 0.0;
                    for (int l = 0; l < N; ++l) rhs += tau * dot(x.slot_value(l), g[l]);
                    rhs += root_tau * (which == 0 ? solution.a.at(k, mode, i)
                                                  : solution.b.at(k, mode, i));
                    worst = std::max(worst, std::abs(lhs - rhs));
                }
            }
        }
    }
    return worst;
}

double BrownianPath::coarse_draw(int k) const {
    const int fine_n = (fine_points() - 1) / partition.steps;
    const double t0 = w[static_cast<std::size_t>(k) * fine_n];
    const double t1 = w[static_cast<std::size_t>(k + 1) * fine_n];
    return (t1 - t0) / std::sqrt(partition.dt());
}

namespace {

// Nonzero coefficients of one slot of a ChaosVec, plus the evaluation data
// needed to price the basis functions on a path.
struct SparseSlot {
    std::vector<int> ordinals;
    std::vector<double> coeffs;  // modes-major blocks: [mode][nnz]
};

struct SparseProcess {
    std::vector<SparseSlot> slots;
    std::vector<int> union_ordinals;
    int modes = 0;
};

SparseProcess sparsify(const ChaosVec& v) {
    SparseProcess out;
    out.modes = v.modes();
    out.slots.resize(v.slots());
    std::set<int> uni;
    const int dim = v.catalog().dim();
    for (int k = 0; k < v.slots(); ++k) {
        std::vector<int> nz;
        for (int i = 0; i < dim; ++i) {
            bool any = false;
            for (int m = 0; m < v.modes(); ++m) {
                if (v.at(k, m, i) != 0.0) {
                    any = true;
                    break;
                }
            }
            if (any) nz.push_back(i);
        }
        out.slots[k].ordinals = nz;
        out.slots[k].coeffs.resize(nz.size() * v.modes());
        for (int m = 0; m < v.modes(); ++m) {
            for (std::size_t j = 0; j < nz.size(); ++j) {
                out.slots[k].coeffs[m * nz.size() + j] = v.at(k, m, nz[j]);
            }
        }
        uni.insert(nz.begin(), nz.end());
    }
    out.union_ordinals.assign(uni.begin(), uni.end());
    return out;
}

// Values of the normalized basis functions for the listed ordinals at the
// given draws.
void basis_values(const ChaosCatalog& cat, const std::vector<int>& ordinals,
                  std::span<const double> draws, std::vector<double>& out,
                  std::vector<std::vector<double>>& h_scratch) {
    const int M = cat.max_degree();
    if (h_scratch.size() != static_cast<std::size_t>(cat.slots())) {
        h_scratch.assign(cat.slots(), {});
    }
    std::vector<bool> have(cat.slots(), false);
    out.assign(ordinals.size(), 0.0);
    for (std::size_t j = 0; j < ordinals.size(); ++j) {
        const MultiIndex& idx = cat.index(ordinals[j]);
        double u = cat.normalization(ordinals[j]);
        const auto& entries = idx.entries();
        for (std::size_t s = 0; s < entries.size(); ++s) {
            if (entries[s] == 0) continue;
            if (!have[s]) {
                h_scratch[s] = hermite_eval_all(M, draws[s]);
                have[s] = true;
            }
            u *= h_scratch[s][entries[s]];
        }
        out[j] = u;
    }
}

}  // namespace

ErrorNorms error_vs_reference(const SolutionPair& solution, const BseeProblem& problem,
                              const PathwiseReference& reference, const ErrorOptions& options) {
    problem.validate();
    const int N = problem.partition.steps;
    const int n = problem.basis.modes;
    const double tau = problem.partition.dt();
    const int R = std::max(options.substeps, 1);
    const int F = N * R;
    const double fine_dt = tau / R;
    const int ref_modes = std::max(reference.modes, n);

    const SparseProcess sa = sparsify(solution.a);
    const SparseProcess sb = sparsify(solution.b);
    const ChaosCatalog& cat = solution.a.catalog();

    // Terminal as a sparse row for the t = T comparison.
    std::vector<int> term_ordinals;
    std::vector<double> term_coeffs;
    for (int i = 0; i < cat.dim(); ++i) {
        bool any = false;
        for (int m = 0; m < n; ++m) {
            if (problem.terminal.at(m, i) != 0.0) any = true;
        }
        if (any) term_ordinals.push_back(i);
    }
    term_coeffs.resize(term_ordinals.size() * n);
    for (int m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < term_ordinals.size(); ++j) {
            term_coeffs[m * term_ordinals.size() + j] = problem.terminal.at(m, term_ordinals[j]);
        }
    }

    std::vector<int> eval_ordinals = sa.union_ordinals;
    eval_ordinals.insert(eval_ordinals.end(), sb.union_ordinals.begin(), sb.union_ordinals.end());
    eval_ordinals.insert(eval_ordinals.end(), term_ordinals.begin(), term_ordinals.end());
    std::sort(eval_ordinals.begin(), eval_ordinals.end());
    eval_ordinals.erase(std::unique(eval_ordinals.begin(), eval_ordinals.end()),
                        eval_ordinals.end());
    std::vector<int> ordinal_pos(cat.dim(), -1);
    for (std::size_t j = 0; j < eval_ordinals.size(); ++j) ordinal_pos[eval_ordinals[j]] = static_cast<int>(j);

    std::vector<double> a_err(F + 1, 0.0);
    std::vector<double> b_err(F, 0.0);

    BrownianPath path;
    path.partition = problem.partition;
    path.substeps = R;
    path.w.resize(F + 1);

    Rng rng(options.seed);
    std::vector<double> draws(N, 0.0);
    std::vector<double> u_vals;
    std::vector<std::vector<double>> h_scratch;
    std::vector<double> z(ref_modes), Z(ref_modes);
    std::vector<double> a_slot(static_cast<std::size_t>(N) * n);
    std::vector<double> b_slot(static_cast<std::size_t>(N) * n);
    std::vector<double> term_val(n);

    const int paths = std::max(options.paths, 1);
    const double root_fine = std::sqrt(fine_dt);
    for (int p = 0; p < paths; ++p) {
        path.w[0] = 0.0;
        for (int i = 0; i < F; ++i) path.w[i + 1] = path.w[i] + root_fine * rng.next_normal();
        for (int k = 0; k < N; ++k) draws[k] = path.coarse_draw(k);

        basis_values(cat, eval_ordinals, draws, u_vals, h_scratch);
        if (reference.prepare) reference.prepare(path);

        for (int k = 0; k < N; ++k) {
            for (int m = 0; m < n; ++m) {
                double acc = 0.0;
                const auto& sk = sa.slots[k];
                for (std::size_t j = 0; j < sk.ordinals.size(); ++j) {
                    acc += sk.coeffs[m * sk.ordinals.size() + j] * u_vals[ordinal_pos[sk.ordinals[j]]];
                }
                a_slot[static_cast<std::size_t>(k) * n + m] = acc;
                double accb = 0.0;
                const auto& skb = sb.slots[k];
                for (std::size_t j = 0; j < skb.ordinals.size(); ++j) {
                    accb += skb.coeffs[m * skb.ordinals.size() + j] * u_vals[ordinal_pos[skb.ordinals[j]]];
                }
                b_slot[static_cast<std::size_t>(k) * n + m] = accb;
            }
        }
        for (int m = 0; m < n; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < term_ordinals.size(); ++j) {
                acc += term_coeffs[m * term_ordinals.size() + j] * u_vals[ordinal_pos[term_ordinals[j]]];
            }
            term_val[m] = acc;
        }

        for (int fi = 0; fi <= F; ++fi) {
            const double t = std::min(path.time(fi), problem.partition.horizon);
            std::fill(z.begin(), z.end(), 0.0);
            std::fill(Z.begin(), Z.end(), 0.0);
            reference.eval(t, path, z, Z);
            const int k = std::min(fi / R, N - 1);
            double sq = 0.0;
            for (int m = 0; m < ref_modes; ++m) {
                const double sol = (fi == F) ? (m < n ? term_val[m] : 0.0)
                                             : (m < n ? a_slot[static_cast<std::size_t>(k) * n + m] : 0.0);
                const double d = sol - z[m];
                sq += d * d;
            }
            a_err[fi] += sq;
            if (fi < F) {
                double sqb = 0.0;
                for (int m = 0; m < ref_modes; ++m) {
                    const double sol = m < n ? b_slot[static_cast<std::size_t>(k) * n + m] : 0.0;
                    const double d = sol - Z[m];
                    sqb += d * d;
                }
                b_err[fi] += sqb;
            }
        }
    }

    ErrorNorms norms;
    for (int fi = 0; fi <= F; ++fi) norms.a_sup_sq = std::max(norms.a_sup_sq, a_err[fi] / paths);
    for (int fi = 0; fi < F; ++fi) norms.b_l2_sq += fine_dt * b_err[fi] / paths;
    return norms;
}

PathwiseReference solution_as_reference(const SolutionPair& solution, const BseeProblem& problem) {
    problem.validate();
    struct State {
        SparseProcess sa, sb;
        std::vector<int> term_ordinals;
        std::vector<double> term_coeffs;
        std::vector<int> eval_ordinals;
        std::vector<int> ordinal_pos;
        CatalogPtr cat;
        Partition partition;
        int modes = 0;
        // per-path cache
        std::vector<double> a_slot, b_slot, term_val, u_vals, draws;
        std::vector<std::vector<double>> h_scratch;
    };
    auto st = std::make_shared<State>();
    st->sa = sparsify(solution.a);
    st->sb = sparsify(solution.b);
    st->cat = solution.a.catalog_ptr();
    st->partition = problem.partition;
    st->modes = problem.basis.modes;
    const ChaosCatalog& cat = *st->cat;
    for (int i = 0; i < cat.dim(); ++i) {
        bool any = false;
        for (int m = 0; m < st->modes; ++m) {
            if (problem.terminal.at(m, i) != 0.0) any = true;
        }
        if (any) st->term_ordinals.push_back(i);
    }
    st->term_coeffs.resize(st->term_ordinals.size() * st->modes);
    for (int m = 0; m < st->modes; ++m) {
        for (std::size_t j = 0; j < st->term_ordinals.size(); ++j) {
            st->term_coeffs[m * st->term_ordinals.size() + j] =
                problem.terminal.at(m, st->term_ordinals[j]);
        }
    }
    st->eval_ordinals = st->sa.union_ordinals;
    st->eval_ordinals.insert(st->eval_ordinals.end(), st->sb.union_ordinals.begin(),
                             st->sb.union_ordinals.end());
    st->eval_ordinals.insert(st->eval_ordinals.end(), st->term_ordinals.begin(),
                             st->term_ordinals.end());
    std::sort(st->eval_ordinals.begin(), st->eval_ordinals.end());
    st->eval_ordinals.erase(std::unique(st->eval_ordinals.begin(), st->eval_ordinals.end()),
                            st->eval_ordinals.end());
    st->ordinal_pos.assign(cat.dim(), -1);
    for (std::size_t j = 0; j < st->eval_ordinals.size(); ++j) {
        st->ordinal_pos[st->eval_ordinals[j]] = static_cast<int>(j);
    }

    PathwiseReference ref;
    ref.modes = st->modes;
    ref.prepare = [st](const BrownianPath& path) {
        const int Nf = st->partition.steps;
        const int fine = path.fine_points() - 1;
        if (fine % Nf != 0) {
            throw std::invalid_argument("path resolution does not refine the reference grid");
        }
        const int ratio = fine / Nf;
        const double root = std::sqrt(st->partition.dt());
        st->draws.assign(Nf, 0.0);
        for (int k = 0; k < Nf; ++k) {
            st->draws[k] = (path.w[static_cast<std::size_t>(k + 1) * ratio] -
                            path.w[static_cast<std::size_t>(k) * ratio]) / root;
        }
        basis_values(*st->cat, st->eval_ordinals, st->draws, st->u_vals, st->h_scratch);
        const int n = st->modes;
        st->a_slot.assign(static_cast<std::size_t>(Nf) * n, 0.0);
        st->b_slot.assign(static_cast<std::size_t>(Nf) * n, 0.0);
        st->term_val.assign(n, 0.0);
        for (int k = 0; k < Nf; ++k) {
            for (int m = 0; m < n; ++m) {
                double acc = 0.0;
                const auto& sk = st->sa.slots[k];
                for (std::size_t j = 0; j < sk.ordinals.size(); ++j) {
                    acc += sk.coeffs[m * sk.ordinals.size() + j] *
                           st->u_vals[st->ordinal_pos[sk.ordinals[j]]];
                }
                st->a_slot[static_cast<std::size_t>(k) * n + m] = acc;
                double accb = 0.0;
                const auto& skb = st->sb.slots[k];
                for (std::size_t j = 0; j < skb.ordinals.size(); ++j) {
                    accb += skb.coeffs[m * skb.ordinals.size() + j] *
                            st->u_vals[st->ordinal_pos[skb.ordinals[j]]];
                }
                st->b_slot[static_cast<std::size_t>(k) * n + m] = accb;
            }
        }
        for (int m = 0; m < n; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < st->term_ordinals.size(); ++j) {
                acc += st->term_coeffs[m * st->term_ordinals.size() + j] *
                       st->u_vals[st->ordinal_pos[st->term_ordinals[j]]];
            }
            st->term_val[m] = acc;
        }
    };
    ref.eval = [st](double t, const BrownianPath&, std::span<double> z, std::span<double> Z) {
        const int Nf = st->partition.steps;
        const int k = st->partition.slot(t);
        const int n = st->modes;
        if (k >= Nf) {
            for (int m = 0; m < n; ++m) z[m] = st->term_val[m];
        } else {
            for (int m = 0; m < n; ++m) z[m] = st->a_slot[static_cast<std::size_t>(k) * n + m];
        }
        const int kb = std::min(k, Nf - 1);
        for (int m = 0; m < n; ++m) Z[m] = st->b_slot[static_cast<std::size_t>(kb) * n + m];
    };
    return ref;
}

}  // namespace transposer
