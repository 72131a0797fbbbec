#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace transposer {

// Equal-spacing time grid on [0, T] with the left/right slot maps.
struct Partition {
    double horizon = 1.0;
    int steps = 1;

    Partition() = default;
    Partition(double T, int N) : horizon(T), steps(N) {
        if (!(T > 0.0)) throw std::invalid_argument("partition horizon must be positive");
        if (N < 1) throw std::invalid_argument("partition needs at least one step");
    }

    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * k / steps; }

    // Index of the slot containing t, with slot(T) = N.
    int slot(double t) const {
        if (t < 0.0 || t > horizon * (1.0 + 1e-12)) {
            throw std::invalid_argument("time outside [0, T]");
        }
        return std::min(static_cast<int>(std::floor(t / dt())), steps);
    }

    double nu(double t) const { return t >= horizon ? horizon : time(slot(t)); }
    double mu(double t) const { return t >= horizon ? horizon : time(slot(t) + 1); }
};

}  // namespace transposer
