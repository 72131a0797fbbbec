#pragma once

#include "transposer/bsee.hpp"
#include "transposer/forward.hpp"

#include <Eigen/Dense>

namespace transposer {

// Minimal-norm null control for the truncated heat system with identity
// control operator and no multiplicative noise. The dual functional over
// terminal data z_T is
//   J(z_T) = 1/2 int_0^T E|z(t)|^2 dt + <y0, E z(0)>
// with (z, Z) the backward solution for terminal z_T and zero driver; its
// minimizer yields the control u(t) = z(t).
struct NullControlProblem {
    Partition partition;
    SpectralBasis basis;
    int chaos_degree = 1;
    SpectralCoeffs y0;

    void validate() const;
    CatalogPtr catalog() const;
};

double functional_J(const ChaosRv& z_terminal, const NullControlProblem& problem);

struct NullControlReport {
    double J_value = 0.0;
    double grad_norm = 0.0;
    double terminal_energy = 0.0;
    double uncontrolled_energy = 0.0;
    int cg_iterations = 0;
};

struct MinimizeResult {
    ChaosRv z_terminal;
    ChaosVec control;
    NullControlReport report;
};

// Minimizes the quadratic J by conjugate gradient on its normal equations.
// The operator is assembled as the Gram matrix of cached per-basis-element
// backward solves. Chaos directions supported on the final increment never
// influence the piecewise-constant solution (they are conditioned away at
// every grid time); their coordinates are fixed to zero to make the
// minimizer unique.
MinimizeResult minimize_J(const NullControlProblem& problem, double tol = 1e-10,
                          const ChaosRv* start = nullptr);

// E|y(t_N)|^2 for the forward system driven by the given control with zero
// noise and initial datum Pi_n y0.
double verify_null(const ChaosVec& control, const NullControlProblem& problem);

// Assembled quadratic operator and linear term of J over the (mode, ordinal)
// coordinates; exposed for the spectral checks of the dual functional.
struct AssembledFunctional {
    Eigen::MatrixXd Q;
    Eigen::VectorXd linear;
};
AssembledFunctional assemble_functional(const NullControlProblem& problem);

}  // namespace transposer
