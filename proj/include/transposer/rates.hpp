#pragma once

#include <string>
#include <vector>

namespace transposer {

// Log-log least-squares fit of squared errors against a sweep variable.
struct RateReport {
    std::string variable;                          // "N" or "n"
    std::vector<std::pair<double, double>> points; // (value, squared error)
    double slope = 0.0;
    double slope_half_width = 0.0;                 // 2x the OLS standard error
    bool fit_skipped = false;                      // errors at round-off level

    std::string to_csv() const;
};

// Fits log(error^2) against log(abscissa); requires >= 4 points. Points with
// error below `floor` mark the fit as skipped.
RateReport fit_rate(const std::string& variable,
                    const std::vector<std::pair<double, double>>& points,
                    double floor = 1e-28);

}  // namespace transposer
