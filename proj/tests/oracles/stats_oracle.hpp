#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

/// Closed-form single-pass sums.
inline std::optional<double> pearson_sums(std::vector<double> const& x, std::vector<double> const& y) {
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    double vx = n * sxx - sx * sx;
    double vy = n * syy - sy * sy;
    if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / std::sqrt(vx * vy);
}

/// Through-origin least squares via the normal equation.
inline std::optional<double> slope_through_origin(std::vector<double> const& dx, std::vector<double> const& dy) {
    if (dx.size() < 2) return std::nullopt;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        num += dx[i] * dy[i];
        den += dx[i] * dx[i];
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

}  // namespace oracle
