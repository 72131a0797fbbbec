#include "transposer/chaos.hpp"

#include "transposer/hermite.hpp"
#include "transposer/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace transposer {

ChaosRv::ChaosRv(CatalogPtr catalog, int modes) : catalog_(std::move(catalog)), modes_(modes) {
    if (!catalog_) throw std::invalid_argument("chaos random variable needs a catalog");
    if (modes < 1) throw std::invalid_argument("chaos random variable needs modes >= 1");
    c_.assign(static_cast<std::size_t>(modes_) * catalog_->dim(), 0.0);
}

double ChaosRv::norm_sq() const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return s;
}

int ChaosRv::max_nonzero_degree() const {
    int deg = -1;
    const int dim = catalog_->dim();
    for (int m = 0; m < modes_; ++m) {
        for (int i = 0; i < dim; ++i) {
            if (at(m, i) != 0.0) deg = std::max(deg, catalog_->degree(i));
        }
    }
    return deg;
}

std::vector<double> ChaosRv::mean() const {
    std::vector<double> out(modes_);
    for (int m = 0; m < modes_; ++m) out[m] = at(m, 0);
    return out;
}

void ChaosRv::set_zero() { std::fill(c_.begin(), c_.end(), 0.0); }

void ChaosRv::scale(double s) {
    for (double& v : c_) v *= s;
}

void ChaosRv::add_scaled(const ChaosRv& other, double s) {
    if (!compatible_with(other)) throw std::invalid_argument("chaos shape mismatch");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * other.c_[i];
}

bool ChaosRv::compatible_with(const ChaosRv& other) const {
    return catalog_ && other.catalog_ && modes_ == other.modes_ &&
           catalog_->slots() == other.catalog_->slots() &&
           catalog_->max_degree() == other.catalog_->max_degree();
}

ChaosRv conditional_expect(const ChaosRv& v, int k) {
    const ChaosCatalog& cat = v.catalog();
    if (k < 0 || k > cat.slots()) {
        throw std::invalid_argument("conditioning slot must lie in [0, N]");
    }
    ChaosRv out(v.catalog_ptr(), v.modes());
    for (int m = 0; m < v.modes(); ++m) {
        auto src = v.mode_coeffs(m);
        auto dst = out.mode_coeffs(m);
        for (int i : cat.slot_ordinals(k)) dst[i] = src[i];
    }
    return out;
}

namespace {

ChaosRv increment_multiply_impl(const ChaosRv& v, int k, double tau, bool truncate) {
    const ChaosCatalog& cat = v.catalog();
    if (k < 0 || k >= cat.slots()) {
        throw std::invalid_argument("increment slot must lie in [0, N)");
    }
    if (tau <= 0.0) throw std::invalid_argument("increment_multiply needs tau > 0");
    const double root_tau = std::sqrt(tau);
    ChaosRv out(v.catalog_ptr(), v.modes());
    const int dim = cat.dim();
    for (int m = 0; m < v.modes(); ++m) {
        auto src = v.mode_coeffs(m);
        auto dst = out.mode_coeffs(m);
        for (int i = 0; i < dim; ++i) {
            const double c = src[i];
            if (c == 0.0) continue;
            const int order = cat.index(i).order(k);
            const int up = cat.raised(i, k);
            if (up >= 0) {
                dst[up] += root_tau * std::sqrt(order + 1.0) * c;
            } else if (!truncate) {
                throw std::invalid_argument(
                    "increment_multiply overflows the degree-" +
                    std::to_string(cat.max_degree()) + " catalog; supply more degree headroom");
            }
            if (order >= 1) {
                const int down = cat.lowered(i, k);
                dst[down] += root_tau * std::sqrt(static_cast<double>(order)) * c;
            }
        }
    }
    return out;
}

}  // namespace

ChaosRv increment_multiply(const ChaosRv& v, int k, double tau) {
    return increment_multiply_impl(v, k, tau, false);
}

ChaosRv increment_multiply_truncated(const ChaosRv& v, int k, double tau) {
    return increment_multiply_impl(v, k, tau, true);
}

std::vector<double> evaluate_sample(const ChaosRv& v, std::span<const double> draws) {
    const ChaosCatalog& cat = v.catalog();
    if (static_cast<int>(draws.size()) != cat.slots()) {
        throw std::invalid_argument("evaluate_sample needs one draw per increment slot (" +
                                    std::to_string(cat.slots()) + ")");
    }
    // Hermite values per slot up to the catalog degree.
    const int M = cat.max_degree();
    std::vector<std::vector<double>> h(cat.slots());
    for (int j = 0; j < cat.slots(); ++j) h[j] = hermite_eval_all(M, draws[j]);

    std::vector<double> out(v.modes(), 0.0);
    const int dim = cat.dim();
    for (int m = 0; m < v.modes(); ++m) {
        auto src = v.mode_coeffs(m);
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double c = src[i];
            if (c == 0.0) continue;
            double u = cat.normalization(i);
            const auto& entries = cat.index(i).entries();
            for (std::size_t j = 0; j < entries.size(); ++j) {
                if (entries[j] > 0) u *= h[j][entries[j]];
            }
            acc += c * u;
        }
        out[m] = acc;
    }
    return out;
}

Eigen::MatrixXd gram_matrix(int k, int M) {
    const auto indices = enumerate_indices(k, M);
    const int dim = static_cast<int>(indices.size());

    // 1-D table E[H_m H_n] from monomial coefficients and the even Gaussian
    // moments E[xi^p] = (p-1)!!.
    std::vector<double> moments(2 * M + 1, 0.0);
    moments[0] = 1.0;
    for (int p = 2; p <= 2 * M; p += 2) moments[p] = moments[p - 2] * (p - 1);
    std::vector<std::vector<double>> coeffs(M + 1);
    for (int n = 0; n <= M; ++n) coeffs[n] = hermite_monomial_coeffs(n);
    Eigen::MatrixXd one_dim(M + 1, M + 1);
    for (int a = 0; a <= M; ++a) {
        for (int b = 0; b <= M; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < coeffs[a].size(); ++i) {
                for (std::size_t j = 0; j < coeffs[b].size(); ++j) {
                    s += coeffs[a][i] * coeffs[b][j] * moments[i + j];
                }
            }
            one_dim(a, b) = s;
        }
    }

    Eigen::MatrixXd gram(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            double v = std::sqrt(indices[r].factorial() * indices[c].factorial());
            for (int j = 0; j < k; ++j) {
                v *= one_dim(indices[r].order(j), indices[c].order(j));
                if (v == 0.0) break;
            }
            gram(r, c) = v;
        }
    }
    return gram;
}

namespace {

std::vector<int> default_active_slots(int slots) {
    std::vector<int> all(slots);
    for (int j = 0; j < slots; ++j) all[j] = j;
    return all;
}

// Ordinals whose support lies inside the active slot set; everything else
// has a vanishing projection coefficient because E[H_m(xi)] = 0 for m >= 1.
std::vector<int> supported_ordinals(const ChaosCatalog& cat, const std::vector<bool>& active) {
    std::vector<int> out;
    for (int i = 0; i < cat.dim(); ++i) {
        const auto& entries = cat.index(i).entries();
        bool ok = true;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            if (entries[j] > 0 && !active[j]) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(i);
    }
    return out;
}

}  // namespace

ChaosRv gamma_project(const std::function<std::vector<double>(std::span<const double>)>& f,
                      int modes, const CatalogPtr& catalog, const ProjectionSpec& spec,
                      const std::optional<std::vector<int>>& active_slots) {
    const ChaosCatalog& cat = *catalog;
    const int N = cat.slots();
    const int M = cat.max_degree();
    const std::vector<int> active = active_slots ? *active_slots : default_active_slots(N);
    std::vector<bool> active_mask(N, false);
    for (int j : active) {
        if (j < 0 || j >= N) throw std::invalid_argument("active slot out of range");
        active_mask[j] = true;
    }
    const std::vector<int> targets = supported_ordinals(cat, active_mask);
    const int d = static_cast<int>(active.size());

    ChaosRv out(catalog, modes);
    std::vector<double> draws(N, 0.0);

    if (const auto* quad = std::get_if<QuadratureSpec>(&spec)) {
        if (d > quad->slot_cap) {
            throw std::invalid_argument(
                "tensor quadrature over " + std::to_string(d) + " active slots exceeds the cap of " +
                std::to_string(quad->slot_cap) + "; use the montecarlo backend instead");
        }
        const GaussHermiteRule rule = gauss_hermite(quad->nodes_per_slot);
        const int Q = quad->nodes_per_slot;
        // Hermite values for every (node, degree) pair, shared by all slots.
        std::vector<std::vector<double>> h(Q);
        for (int q = 0; q < Q; ++q) h[q] = hermite_eval_all(M, rule.nodes[q]);
        std::vector<int> active_pos(N, -1);
        for (int j = 0; j < d; ++j) active_pos[active[j]] = j;

        std::vector<int> odo(d, 0);
        for (;;) {
            double w = 1.0;
            for (int j = 0; j < d; ++j) {
                draws[active[j]] = rule.nodes[odo[j]];
                w *= rule.weights[odo[j]];
            }
            const std::vector<double> fval = f(draws);
            if (static_cast<int>(fval.size()) != modes) {
                throw std::invalid_argument("projected functional returned wrong mode count");
            }
            for (int i : targets) {
                double u = cat.normalization(i);
                const auto& entries = cat.index(i).entries();
                for (std::size_t j = 0; j < entries.size(); ++j) {
                    if (entries[j] > 0) u *= h[odo[active_pos[j]]][entries[j]];
                }
                for (int m = 0; m < modes; ++m) out.at(m, i) += w * fval[m] * u;
            }
            int pos = d - 1;
            while (pos >= 0 && ++odo[pos] == Q) odo[pos--] = 0;
            if (pos < 0) break;
        }
        return out;
    }

    const auto& mc = std::get<MonteCarloSpec>(spec);
    if (mc.samples < 1) throw std::invalid_argument("montecarlo projection needs samples >= 1");
    Rng rng(mc.seed);
    const double inv = 1.0 / mc.samples;
    std::vector<std::vector<double>> h(N, std::vector<double>(M + 1, 0.0));
    for (int s = 0; s < mc.samples; ++s) {
        for (int j : active) draws[j] = rng.next_normal();
        const std::vector<double> fval = f(draws);
        if (static_cast<int>(fval.size()) != modes) {
            throw std::invalid_argument("projected functional returned wrong mode count");
        }
        for (int j : active) h[j] = hermite_eval_all(M, draws[j]);
        for (int i : targets) {
            double u = cat.normalization(i);
            const auto& entries = cat.index(i).entries();
            for (std::size_t j = 0; j < entries.size(); ++j) {
                if (entries[j] > 0) u *= h[j][entries[j]];
            }
            for (int m = 0; m < modes; ++m) out.at(m, i) += inv * fval[m] * u;
        }
    }
    return out;
}

ChaosVec::ChaosVec(CatalogPtr catalog, int modes, int degree_bound)
    : catalog_(std::move(catalog)), modes_(modes), degree_bound_(degree_bound) {
    if (!catalog_) throw std::invalid_argument("chaos vector needs a catalog");
    if (modes < 1) throw std::invalid_argument("chaos vector needs modes >= 1");
    if (degree_bound < 0 || degree_bound > catalog_->max_degree()) {
        throw std::invalid_argument("chaos vector degree bound must lie in [0, catalog degree]");
    }
    c_.assign(static_cast<std::size_t>(slots()) * modes_ * catalog_->dim(), 0.0);
}

ChaosRv ChaosVec::slot_value(int slot) const {
    if (slot < 0 || slot >= slots()) throw std::out_of_range("slot out of range");
    ChaosRv out(catalog_, modes_);
    for (int m = 0; m < modes_; ++m) {
        auto dst = out.mode_coeffs(m);
        for (int i = 0; i < catalog_->dim(); ++i) dst[i] = at(slot, m, i);
    }
    return out;
}

void ChaosVec::set_slot_value(int slot, const ChaosRv& value) {
    if (slot < 0 || slot >= slots()) throw std::out_of_range("slot out of range");
    if (value.modes() != modes_ || value.catalog().dim() != catalog_->dim()) {
        throw std::invalid_argument("slot value shape mismatch");
    }
    for (int m = 0; m < modes_; ++m) {
        auto src = value.mode_coeffs(m);
        for (int i = 0; i < catalog_->dim(); ++i) {
            const double c = src[i];
            if (c != 0.0) {
                if (catalog_->degree(i) > degree_bound_) {
                    throw std::invalid_argument("slot value exceeds the vector's degree bound " +
                                                std::to_string(degree_bound_));
                }
                if (catalog_->index(i).support_end() > slot) {
                    throw std::invalid_argument(
                        "slot " + std::to_string(slot) +
                        " value is not measurable at its grid time (index " +
                        catalog_->index(i).to_string() + ")");
                }
            }
            at(slot, m, i) = c;
        }
    }
}

double ChaosVec::norm_sq(double tau) const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return tau * s;
}

double ChaosVec::slot_norm_sq(int slot) const {
    double s = 0.0;
    for (int m = 0; m < modes_; ++m) {
        for (int i = 0; i < catalog_->dim(); ++i) {
            const double v = at(slot, m, i);
            s += v * v;
        }
    }
    return s;
}

void ChaosVec::set_zero() { std::fill(c_.begin(), c_.end(), 0.0); }

void ChaosVec::scale(double s) {
    for (double& v : c_) v *= s;
}

void ChaosVec::add_scaled(const ChaosVec& other, double s) {
    if (!compatible_with(other)) throw std::invalid_argument("chaos vector shape mismatch");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * other.c_[i];
}

int ChaosVec::max_nonzero_degree() const {
    int deg = -1;
    for (int k = 0; k < slots(); ++k) {
        for (int m = 0; m < modes_; ++m) {
            for (int i = 0; i < catalog_->dim(); ++i) {
                if (at(k, m, i) != 0.0) deg = std::max(deg, catalog_->degree(i));
            }
        }
    }
    return deg;
}

bool ChaosVec::compatible_with(const ChaosVec& other) const {
    return catalog_ && other.catalog_ && modes_ == other.modes_ &&
           catalog_->slots() == other.catalog_->slots() &&
           catalog_->max_degree() == other.catalog_->max_degree();
}

}  // namespace transposer
