#pragma once

#include "transposer/catalog.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace transposer {

// A vector-valued random variable expanded over the normalized generalized
// Hermite basis sqrt(alpha!) prod_j H_{alpha_j}(xi_j). Coefficients are laid
// out mode-major over the catalog ordinals; the L^2(Omega) squared norm is
// the plain sum of squares.
class ChaosRv {
public:
    ChaosRv() = default;
    ChaosRv(CatalogPtr catalog, int modes);

    int modes() const { return modes_; }
    const ChaosCatalog& catalog() const { return *catalog_; }
    const CatalogPtr& catalog_ptr() const { return catalog_; }

    double at(int mode, int ordinal) const { return c_[idx(mode, ordinal)]; }
    double& at(int mode, int ordinal) { return c_[idx(mode, ordinal)]; }

    std::span<const double> mode_coeffs(int mode) const {
        return {c_.data() + static_cast<std::size_t>(mode) * catalog_->dim(),
                static_cast<std::size_t>(catalog_->dim())};
    }
    std::span<double> mode_coeffs(int mode) {
        return {c_.data() + static_cast<std::size_t>(mode) * catalog_->dim(),
                static_cast<std::size_t>(catalog_->dim())};
    }

    double norm_sq() const;
    int max_nonzero_degree() const;  // -1 when identically zero
    bool is_deterministic() const { return max_nonzero_degree() <= 0; }

    // Expectation vector (the empty-index coefficients).
    std::vector<double> mean() const;

    void set_zero();
    void scale(double s);
    void add_scaled(const ChaosRv& other, double s);  // this += s * other

    bool compatible_with(const ChaosRv& other) const;

private:
    std::size_t idx(int mode, int ordinal) const {
        return static_cast<std::size_t>(mode) * catalog_->dim() + ordinal;
    }

    CatalogPtr catalog_;
    int modes_ = 0;
    std::vector<double> c_;
};

// E[v | F_{t_k}]: keeps exactly the coefficients whose index is supported on
// the first k increments. k in [0, slots].
ChaosRv conditional_expect(const ChaosRv& v, int k);

// Delta_{k+1} W * v in chaos coordinates (multiplication by the slot-k
// increment, 0-based), using xi u_alpha = sqrt(m+1) u_{alpha+e} +
// sqrt(m) u_{alpha-e} at the slot and the sqrt(tau) scale of the increment.
// Throws when v carries top-degree coefficients the catalog cannot raise.
ChaosRv increment_multiply(const ChaosRv& v, int k, double tau);

// As above but silently drops the degree-overflow part. Only valid where the
// dropped components are orthogonal to everything they will be paired with.
ChaosRv increment_multiply_truncated(const ChaosRv& v, int k, double tau);

// Pointwise evaluation at given normalized increments (one draw per slot).
std::vector<double> evaluate_sample(const ChaosRv& v, std::span<const double> draws);

// Exact Gaussian-moment Gram matrix of the normalized basis over k slots and
// degree <= M, computed from monomial expansions and even-moment tables. The
// orthonormality of the basis makes it the identity.
Eigen::MatrixXd gram_matrix(int k, int M);

// Backend selection for the order-M projection of a pathwise functional.
struct QuadratureSpec {
    int nodes_per_slot = 5;
    int slot_cap = 8;
};
struct MonteCarloSpec {
    std::uint64_t seed = 0;
    int samples = 100'000;
};
using ProjectionSpec = std::variant<QuadratureSpec, MonteCarloSpec>;

// Gamma_M: chaos coefficients c_alpha = E[f(xi) u_alpha(xi)] of a pathwise
// functional of all increments, estimated by tensor Gauss-Hermite quadrature
// or seeded Monte Carlo. `active_slots`, when given, asserts that f depends
// on those increments only; coefficients supported elsewhere vanish exactly
// and the quadrature tensors only over the active ones.
ChaosRv gamma_project(
    const std::function<std::vector<double>(std::span<const double>)>& f, int modes,
    const CatalogPtr& catalog, const ProjectionSpec& spec,
    const std::optional<std::vector<int>>& active_slots = std::nullopt);

// A process in the finite transposition space: piecewise constant on the
// partition slots, with the slot-k value lying in the order-M chaos over the
// first k increments. Coefficients are stored per (slot, mode, ordinal) in
// the value basis h_{k,i}; the L^2(dt x Omega) squared norm is tau times the
// sum of squared coefficients.
class ChaosVec {
public:
    ChaosVec() = default;
    ChaosVec(CatalogPtr catalog, int modes, int degree_bound);

    int modes() const { return modes_; }
    int slots() const { return catalog_->slots(); }
    int degree_bound() const { return degree_bound_; }
    const ChaosCatalog& catalog() const { return *catalog_; }
    const CatalogPtr& catalog_ptr() const { return catalog_; }

    double at(int slot, int mode, int ordinal) const { return c_[idx(slot, mode, ordinal)]; }
    double& at(int slot, int mode, int ordinal) { return c_[idx(slot, mode, ordinal)]; }

    ChaosRv slot_value(int slot) const;
    // Stores `value` as the slot value. Enforces the degree bound and the
    // adaptedness mask (support within the first `slot` increments).
    void set_slot_value(int slot, const ChaosRv& value);

    double norm_sq(double tau) const;  // L^2(dt x Omega)
    double slot_norm_sq(int slot) const;

    void set_zero();
    void scale(double s);
    void add_scaled(const ChaosVec& other, double s);

    int max_nonzero_degree() const;
    bool compatible_with(const ChaosVec& other) const;

private:
    std::size_t idx(int slot, int mode, int ordinal) const {
        return (static_cast<std::size_t>(slot) * modes_ + mode) * catalog_->dim() + ordinal;
    }

    CatalogPtr catalog_;
    int modes_ = 0;
    int degree_bound_ = 0;
    std::vector<double> c_;
};

}  // namespace transposer
