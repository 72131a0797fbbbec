#pragma once

#include "transposer/bsee.hpp"
#include "transposer/rates.hpp"

#include <string>
#include <vector>

namespace transposer {

// A named benchmark instance: a problem builder per step count plus the
// closed-form reference it converges to.
struct TimeRateInstance {
    std::string name;
    std::function<BseeProblem(int N)> problem;
    std::function<PathwiseReference(int N)> reference;
    bool deterministic = false;  // single-path error measurement suffices
    bool nonlinear = false;      // solve with the Picard iteration
    PicardScheme picard_scheme = PicardScheme::implicit_step;
};

// One-mode heat equation with terminal W(T) phi_1: the discrete solution is
// (1+lambda tau)^{-(N-k)} W(t_k) with correction (1+lambda tau)^{-(N-k-1)},
// converging to z = e^{-lambda(T-t)} W(t), Z = e^{-lambda(T-t)}.
TimeRateInstance brownian_terminal_instance(double T = 1.0);

// One-mode sin(a) driver with terminal 1 + c W(T) phi_1; self-convergence
// benchmark solved by the Picard iteration at M = 1.
TimeRateInstance sin_driver_instance(double T = 1.0, double noise_load = 0.5,
                                     PicardScheme scheme = PicardScheme::implicit_step);

// Spatial sweep: deterministic terminal with coefficient decay i^{-decay} on
// a reference mode range wider than any swept n, fine fixed partition.
struct SpaceRateInstance {
    std::string name;
    int fixed_steps = 256;
    int reference_modes = 48;
    double decay = 1.6;
    double horizon = 1.0;

    BseeProblem problem(int n) const;
    PathwiseReference reference() const;
};
SpaceRateInstance spectral_tail_instance();

// Per-N solve + error against the registered reference, slope over log tau.
RateReport sweep_time(const TimeRateInstance& instance, const std::vector<int>& step_counts,
                      const ErrorOptions& options = {});

// Self-convergence variant: errors against the instance solved at
// `reference_steps` instead of the closed form.
RateReport sweep_time_self(const TimeRateInstance& instance, const std::vector<int>& step_counts,
                           int reference_steps, const ErrorOptions& options = {});

// Per-n solve at the fixed partition + error against the spectral reference,
// slope over log(n + 1).
RateReport sweep_space(const SpaceRateInstance& instance, const std::vector<int>& mode_counts,
                       const ErrorOptions& options = {});

// Helper shared by the sweeps and tests.
SolutionPair solve_instance(const TimeRateInstance& instance, int N);

}  // namespace transposer
