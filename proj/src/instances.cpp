#include "transposer/instances.hpp"

#include "transposer/parallel.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace transposer {

namespace {

CatalogLimits sweep_limits() {
    CatalogLimits limits;
    limits.max_slots = 1 << 12;
    return limits;
}

// Terminal c0 + load * W(T) on mode 1: load * sqrt(tau) on every degree-one
// index.
ChaosRv wiener_terminal(const CatalogPtr& cat, double T, double c0, double load) {
    ChaosRv terminal(cat, 1);
    terminal.at(0, 0) = c0;
    const int N = cat->slots();
    const double root_tau = std::sqrt(T / N);
    for (int j = 0; j < N; ++j) {
        terminal.at(0, cat->find(MultiIndex().raised(j))) = load * root_tau;
    }
    return terminal;
}

}  // namespace

TimeRateInstance brownian_terminal_instance(double T) {
    TimeRateInstance inst;
    inst.name = "brownian-terminal";
    inst.problem = [T](int N) {
        const CatalogPtr cat = make_catalog(N, 1, sweep_limits());
        return BseeProblem{Partition(T, N), SpectralBasis{1}, 1, ZeroDriver{},
                           wiener_terminal(cat, T, 0.0, 1.0)};
    };
    inst.reference = [T](int) {
        const double lambda = 1.0;
        PathwiseReference ref;
        ref.modes = 1;
        ref.eval = [T, lambda](double t, const BrownianPath& path, std::span<double> z,
                               std::span<double> Z) {
            const double decay = std::exp(-lambda * (T - t));
            const int fi = std::min<int>(static_cast<int>(std::llround(t / path.fine_dt())),
                                         path.fine_points() - 1);
            z[0] = decay * path.w[fi];
            Z[0] = decay;
        };
        return ref;
    };
    inst.deterministic = false;
    inst.nonlinear = false;
    return inst;
}

TimeRateInstance sin_driver_instance(double T, double noise_load, PicardScheme scheme) {
    TimeRateInstance inst;
    inst.name = scheme == PicardScheme::implicit_step ? "sin-driver" : "sin-driver-explicit";
    inst.problem = [T, noise_load](int N) {
        const CatalogPtr cat = make_catalog(N, 1, sweep_limits());
        LipschitzDriver driver;
        driver.lipschitz = 1.0;
        driver.f = [](double, std::span<const double> a, std::span<const double>) {
            return std::vector<double>{std::sin(a[0])};
        };
        return BseeProblem{Partition(T, N), SpectralBasis{1}, 1, std::move(driver),
                           wiener_terminal(cat, T, 1.0, noise_load)};
    };
    inst.reference = [](int) { return PathwiseReference{}; };
    inst.deterministic = noise_load == 0.0;
    inst.nonlinear = true;
    inst.picard_scheme = scheme;
    return inst;
}

BseeProblem SpaceRateInstance::problem(int n) const {
    const CatalogPtr cat = make_catalog(fixed_steps, 1, sweep_limits());
    ChaosRv terminal(cat, n);
    for (int m = 1; m <= n; ++m) {
        terminal.at(m - 1, 0) = std::pow(static_cast<double>(m), -decay);
    }
    return BseeProblem{Partition(horizon, fixed_steps), SpectralBasis{n}, 1, ZeroDriver{},
                       std::move(terminal)};
}

PathwiseReference SpaceRateInstance::reference() const {
    PathwiseReference ref;
    ref.modes = reference_modes;
    const double T = horizon;
    const double d = decay;
    const int modes = reference_modes;
    ref.eval = [T, d, modes](double t, const BrownianPath&, std::span<double> z,
                             std::span<double> Z) {
        for (int m = 1; m <= modes; ++m) {
            const double lambda = static_cast<double>(m) * m;
            z[m - 1] = std::pow(static_cast<double>(m), -d) * std::exp(-lambda * (T - t));
            Z[m - 1] = 0.0;
        }
    };
    return ref;
}

SpaceRateInstance spectral_tail_instance() { return {}; }

SolutionPair solve_instance(const TimeRateInstance& instance, int N) {
    const BseeProblem problem = instance.problem(N);
    if (instance.nonlinear) {
        PicardOptions options;
        options.scheme = instance.picard_scheme;
        options.tol = 1e-11;
        return solve_picard(problem, options);
    }
    return solve_linear(problem);
}

RateReport sweep_time(const TimeRateInstance& instance, const std::vector<int>& step_counts,
                      const ErrorOptions& options) {
    std::vector<std::pair<double, double>> points(step_counts.size());
    parallel_for(step_counts.size(), [&](std::size_t i) {
        const int N = step_counts[i];
        const BseeProblem problem = instance.problem(N);
        const SolutionPair solution = solve_instance(instance, N);
        ErrorOptions local = options;
        if (instance.deterministic) local.paths = 1;
        const ErrorNorms norms =
            error_vs_reference(solution, problem, instance.reference(N), local);
        points[i] = {problem.partition.dt(), norms.combined()};
    });
    return fit_rate("N", points);
}

RateReport sweep_time_self(const TimeRateInstance& instance, const std::vector<int>& step_counts,
                           int reference_steps, const ErrorOptions& options) {
    const BseeProblem ref_problem = instance.problem(reference_steps);
    const SolutionPair ref_solution = solve_instance(instance, reference_steps);
    const PathwiseReference reference = solution_as_reference(ref_solution, ref_problem);

    std::vector<std::pair<double, double>> points(step_counts.size());
    for (std::size_t i = 0; i < step_counts.size(); ++i) {
        const int N = step_counts[i];
        if (reference_steps % N != 0) {
            throw std::invalid_argument("reference step count must be a multiple of each N");
        }
        const BseeProblem problem = instance.problem(N);
        const SolutionPair solution = solve_instance(instance, N);
        ErrorOptions local = options;
        local.substeps = reference_steps / N;  // land exactly on the reference grid
        if (instance.deterministic) local.paths = 1;
        const ErrorNorms norms = error_vs_reference(solution, problem, reference, local);
        points[i] = {problem.partition.dt(), norms.combined()};
    }
    return fit_rate("N", points);
}

RateReport sweep_space(const SpaceRateInstance& instance, const std::vector<int>& mode_counts,
                       const ErrorOptions& options) {
    const PathwiseReference reference = instance.reference();
    std::vector<std::pair<double, double>> points(mode_counts.size());
    parallel_for(mode_counts.size(), [&](std::size_t i) {
        const int n = mode_counts[i];
        if (n >= instance.reference_modes) {
            throw std::invalid_argument("swept n must stay below the reference mode count");
        }
        const BseeProblem problem = instance.problem(n);
        const SolutionPair solution = solve_linear(problem);
        ErrorOptions local = options;
        local.paths = 1;  // the instance is deterministic
        local.substeps = 1;
        const ErrorNorms norms = error_vs_reference(solution, problem, reference, local);
        points[i] = {static_cast<double>(n + 1), norms.combined()};
    });
    return fit_rate("n", points);
}

}  // namespace transposer
