#pragma once

#include "transposer/bsee.hpp"
#include "transposer/forward.hpp"

#include <vector>

namespace transposer {

// Linear-quadratic control of the stochastic heat equation with additive
// noise: identity state/control/terminal weights, cost
//   1/2 ( ||y||_{X_tau}^2 + ||u||_{U_tau}^2 ) + 1/2 E||y(T)||^2.
struct SlqProblem {
    Partition partition;
    SpectralBasis basis;
    int chaos_degree = 1;
    SpectralCoeffs y0;
    SpectralCoeffs sigma;
    double kappa = 0.0;  // <= 0 selects the default 1 + T + T^2

    double effective_kappa() const;
    void validate() const;
};

struct SlqIterate {
    ChaosVec control;
    ForwardTrajectory state;
    SolutionPair adjoint;
    double cost = 0.0;
    double residual = 0.0;  // max-condition defect ||u - z||_{U_tau}
};

struct SlqOptions {
    double tol = 1e-8;
    int max_iter = 500;
    bool keep_history = true;
    // Runs the iteration with the state equation stripped of the control
    // term (for comparison only; the iteration then targets the wrong
    // optimum).
    bool forward_without_control = false;
};

double cost(const ForwardTrajectory& y, const ChaosVec& u, const Partition& partition);

// Adjoint backward solve: terminal -y(T), driver source y(t_{k+1}).
SolutionPair adjoint_solve(const ForwardTrajectory& y, const SlqProblem& problem);

double max_condition_residual(const ChaosVec& u, const ChaosVec& z, const Partition& partition);

struct SlqResult {
    std::vector<SlqIterate> history;  // last entry is the accepted iterate
    int iterations = 0;
    bool converged = false;
};

// Averaged-gradient iteration u <- (1 - 1/kappa) u + (1/kappa) z(u).
SlqResult gradient_iterate(const SlqProblem& problem, const ChaosVec& u0,
                           const SlqOptions& options = {});

// Starts from the zero control.
SlqResult gradient_iterate(const SlqProblem& problem, const SlqOptions& options = {});

// Scalar Riccati reference for one spectral mode: solves
//   -P' = -2 lambda P + 1 - P^2,  P(T) = 1
// on a 10x refined RK4 grid and returns the closed-loop optimal cost
// contribution 1/2 P(0) y0^2 + 1/2 sigma^2 int_0^T P dt.
struct RiccatiOracle {
    std::vector<double> p;  // P at the RK4 grid times
    double p0 = 0.0;
    double optimal_cost = 0.0;
};
RiccatiOracle riccati_oracle(const SlqProblem& problem, int mode, int refinement = 10);

}  // namespace transposer
