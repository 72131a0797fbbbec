#include "transposer/rates.hpp"

#include "transposer/io.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace transposer {

std::string RateReport::to_csv() const {
    std::ostringstream out;
    out << "# schema=1\n";
    out << "# variable=" << variable << " slope=" << format_double(slope)
        << " half_width=" << format_double(slope_half_width)
        << " fit_skipped=" << (fit_skipped ? 1 : 0) << "\n";
    out << "value,error_sq\n";
    for (const auto& [value, err] : points) {
        out << format_double(value) << ',' << format_double(err) << "\n";
    }
    return out.str();
}

RateReport fit_rate(const std::string& variable,
                    const std::vector<std::pair<double, double>>& points, double floor) {
    if (points.size() < 4) {
        throw std::invalid_argument("slope fit needs at least 4 sweep points, got " +
                                    std::to_string(points.size()));
    }
    RateReport report;
    report.variable = variable;
    report.points = points;
    for (const auto& [value, err] : points) {
        if (!(value > 0.0)) throw std::invalid_argument("sweep values must be positive");
        if (err < floor) report.fit_skipped = true;
    }
    if (report.fit_skipped) return report;

    const int m = static_cast<int>(points.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(m), ys(m);
    for (int i = 0; i < m; ++i) {
        xs[i] = std::log(points[i].first);
        ys[i] = std::log(points[i].second);
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    report.slope = sxy / sxx;
    double rss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double fit = my + report.slope * (xs[i] - mx);
        rss += (ys[i] - fit) * (ys[i] - fit);
    }
    const double var = m > 2 ? rss / (m - 2) / sxx : 0.0;
    report.slope_half_width = 2.0 * std::sqrt(var);
    return report;
}

}  // namespace transposer
