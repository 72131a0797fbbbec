#pragma once

#include "transposer/chaos.hpp"
#include "transposer/partition.hpp"
#include "transposer/spectral.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace transposer {

// Driver F(t, a, b) of the backward equation, in spectral coordinates.
struct ZeroDriver {};

// F = La a + Lb b + f(t). The per-slot source is sampled at the right grid
// endpoint: source[k] is f(t_{k+1}) and may be random (chaos-valued), which
// is how the control layer feeds state trajectories back in.
struct AffineDriver {
    Eigen::MatrixXd state_gain;  // La
    Eigen::MatrixXd corr_gain;   // Lb
    std::vector<ChaosRv> source; // length N, possibly empty for no source
};

// Pathwise Lipschitz driver with its declared constant.
struct LipschitzDriver {
    std::function<std::vector<double>(double t, std::span<const double> a,
                                      std::span<const double> b)> f;
    double lipschitz = 1.0;
};

using DriverSpec = std::variant<ZeroDriver, AffineDriver, LipschitzDriver>;

struct BseeProblem {
    Partition partition;
    SpectralBasis basis;
    int chaos_degree = 1;  // M
    DriverSpec driver;
    ChaosRv terminal;      // degree <= M, modes == basis.modes

    void validate() const;
    CatalogPtr catalog() const { return terminal.catalog_ptr(); }
};

struct SolveDiagnostics {
    int iterations = 0;
    double residual = 0.0;
    std::string scheme;
    bool converged = true;
};

// The finite transposition solution: a piecewise constant with slot values
// of degree <= M, b of degree <= M-1.
struct SolutionPair {
    ChaosVec a;
    ChaosVec b;
    SolveDiagnostics diagnostics;
};

// Diagonal resolvent entries 1/(1 + lambda_i tau) of the implicit step.
Eigen::VectorXd lambda0(const SpectralBasis& basis, double tau);

// Exact backward recursion for zero/affine drivers:
//   b_k = E( (Delta_{k+1}W / tau) a_{k+1} | F_{t_k} )
//   a_k = Lambda0 ( E(a_{k+1} | F_{t_k}) - tau Gamma_M F(t_{k+1}, a_k, b_k) )
// resolved as one linear solve per step; no sampling is involved.
SolutionPair solve_linear(const BseeProblem& problem);

enum class PicardScheme { implicit_step, explicit_step };

struct PicardOptions {
    PicardScheme scheme = PicardScheme::implicit_step;
    double tol = 1e-10;
    int max_iter = 50;
    double damping = 1.0;
    ProjectionSpec projection = QuadratureSpec{};
};

// Fixed-point iteration for Lipschitz drivers; Gamma_M F is estimated with
// the configured projection backend. The implicit scheme resolves the
// current-slot unknown by an inner fixed point (guarded by a contraction
// check), the explicit scheme evaluates F at the step-(k+1) values.
SolutionPair solve_picard(const BseeProblem& problem, const PicardOptions& options);

// Test process of the duality pairing: the implicit-resolvent propagation
//   x_0 = Lambda0 tau v1_0
//   x_{k+1} = Lambda0 ( x_k + tau v1_{k+1} + v2_k Delta_{k+1}W )
// returned as slot values; the terminal pairing uses the last slot value.
ChaosVec test_process(const ChaosVec& v1, const ChaosVec& v2, const SpectralBasis& basis,
                      const Partition& partition);

// Maximum absolute defect of the variational identity over all basis test
// pairs (v1, v2), everything evaluated exactly in chaos coordinates. For
// nonlinear drivers the projection backend should match the solver's.
double variational_residual(const SolutionPair& solution, const BseeProblem& problem,
                            const ProjectionSpec& projection = QuadratureSpec{});

// --- error measurement against a reference -------------------------------

// Brownian path sampled on a refinement of the partition grid.
struct BrownianPath {
    Partition partition;
    int substeps = 1;
    std::vector<double> w;  // W at the fine grid times, size N*substeps + 1

    double fine_dt() const { return partition.dt() / substeps; }
    double time(int fine_index) const { return fine_dt() * fine_index; }
    int fine_points() const { return static_cast<int>(w.size()); }
    // Normalized increment of coarse slot k.
    double coarse_draw(int k) const;
};

// Reference pair (z, Z) evaluated pathwise at time t. `prepare`, when set,
// is called once per sampled path before the eval sweep (lets wrapped
// solutions cache their per-path state).
struct PathwiseReference {
    int modes = 1;
    std::function<void(const BrownianPath& path)> prepare;
    std::function<void(double t, const BrownianPath& path, std::span<double> z,
                       std::span<double> Z)> eval;
};

struct ErrorOptions {
    std::uint64_t seed = 0x5EED;
    int paths = 100'000;
    int substeps = 4;  // intra-slot sampling of the sup-in-time error
};

struct ErrorNorms {
    double a_sup_sq = 0.0;  // sup_t E|a(nu(t)) - z(t)|^2
    double b_l2_sq = 0.0;   // int_0^T E|b(nu(t)) - Z(t)|^2 dt
    double combined() const { return a_sup_sq + b_l2_sq; }
};

// Monte-Carlo error norms over seeded Brownian paths, refined inside slots so
// the piecewise-constant representation error is visible. Deterministic
// solutions are measured with a single path.
ErrorNorms error_vs_reference(const SolutionPair& solution, const BseeProblem& problem,
                              const PathwiseReference& reference,
                              const ErrorOptions& options = {});

// Wraps a (finer) computed solution as a pathwise reference for
// self-convergence studies. Both partitions must share the horizon and the
// fine step count must divide the reference's slot count evaluation grid.
PathwiseReference solution_as_reference(const SolutionPair& solution, const BseeProblem& problem);

}  // namespace transposer
