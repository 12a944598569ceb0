#include "gebs/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "gebs/errors.hpp"

namespace gebs {

bool Histogram::is_mode(std::size_t bin) const { return std::find(modes.begin(), modes.end(), bin) != modes.end(); }

std::vector<std::size_t> detect_modes(const std::vector<double>& s, double prominence) {
    std::vector<std::size_t> modes;
    if (s.empty()) return modes;
    const double top = *std::max_element(s.begin(), s.end());
    if (!(top > 0)) return modes;
    const std::size_t m = s.size();
    for (std::size_t k = 0; k < m; ++k) {
        const bool rise = k == 0 || s[k] > s[k - 1];
        const bool fall = k + 1 == m || s[k] >= s[k + 1];
        if (!rise || !fall || s[k] <= 0) continue;
        // lowest point on each side before reaching higher ground
        double left = s[k];
        for (std::size_t j = k; j-- > 0;) {
            if (s[j] > s[k]) break;
            left = std::min(left, s[j]);
        }
        double right = s[k];
        for (std::size_t j = k + 1; j < m; ++j) {
            if (s[j] > s[k]) break;
            right = std::min(right, s[j]);
        }
        if (k == 0) left = 0;
        if (k + 1 == m) right = 0;
        const double prom = s[k] - std::max(left, right);
        if (prom >= prominence * top) modes.push_back(k);
    }
    return modes;
}

Histogram density_histogram(const std::vector<double>& draws, std::size_t bins,
                            std::optional<std::pair<double, double>> range) {
    if (draws.size() < 50) throw InsufficientSample("histogram needs at least 50 draws");
    if (bins < 10) throw ParameterError("histogram needs at least 10 bins");
    for (double v : draws)
        if (!std::isfinite(v)) throw ParameterError("histogram draws must be finite");
    double lo, hi;
    if (range) {
        std::tie(lo, hi) = *range;
    } else {
        const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
        lo = *mn;
        hi = *mx;
    }
    if (!(hi > lo)) {
        const double pad = std::max(1e-12, std::abs(lo) * 1e-9);
        lo -= pad;
        hi += pad;
    }
    Histogram h;
    const double width = (hi - lo) / static_cast<double>(bins);
    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = lo + width * static_cast<double>(k);
    h.edges.back() = hi;
    std::vector<double> counts(bins, 0.0);
    for (double v : draws) {
        if (v < lo || v > hi) {
            ++h.outside;
            continue;
        }
        auto k = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(k, bins - 1)] += 1.0;
    }
    const double total = static_cast<double>(draws.size() - h.outside);
    if (!(total > 0)) throw InsufficientSample("no draws inside the histogram range");
    h.centers.resize(bins);
    h.mass.resize(bins);
    h.density.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        h.centers[k] = 0.5 * (h.edges[k] + h.edges[k + 1]);
        h.mass[k] = counts[k] / total;
        h.density[k] = h.mass[k] / width;
    }
    h.smoothed.resize(bins);
    const std::size_t half = kModeSmoothingBins / 2;
    for (std::size_t k = 0; k < bins; ++k) {
        const std::size_t a = k >= half ? k - half : 0;
        const std::size_t b = std::min(bins - 1, k + half);
        double s = 0;
        for (std::size_t j = a; j <= b; ++j) s += h.density[j];
        h.smoothed[k] = s / static_cast<double>(b - a + 1);
    }
    h.modes = detect_modes(h.smoothed);
    return h;
}

}  // namespace gebs
