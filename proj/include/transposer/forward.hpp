#pragma once

#include "transposer/bsee.hpp"
#include "transposer/chaos.hpp"
#include "transposer/partition.hpp"
#include "transposer/spectral.hpp"

#include <vector>

namespace transposer {

// Controlled forward heat equation with additive noise, semi-discretized in
// the spectral basis and advanced by the implicit Euler resolvent.
struct ForwardProblem {
    Partition partition;
    SpectralBasis basis;
    SpectralCoeffs initial;      // Pi_n y0
    ChaosVec control;            // may be all zero
    SpectralCoeffs noise;        // Pi_n sigma (deterministic)

    void validate() const;
};

struct ForwardTrajectory {
    std::vector<ChaosRv> values;  // y(t_0) .. y(t_N)

    int steps() const { return static_cast<int>(values.size()) - 1; }
    const ChaosRv& at(int k) const { return values[k]; }
};

// y(t_{k+1}) = Lambda0 ( y(t_k) + tau u(t_k) + sigma Delta_{k+1}W ), exact in
// chaos coordinates; the noise increment is realized by multiplying the
// constant sigma with the slot increment.
ForwardTrajectory solve_implicit(const ForwardProblem& problem);

const ChaosRv& terminal_value(const ForwardTrajectory& trajectory);

}  // namespace transposer
