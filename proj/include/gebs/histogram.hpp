#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace gebs {

inline constexpr std::size_t kModeSmoothingBins = 3;
inline constexpr double kModeProminence = 0.10;  // fraction of the global smoothed maximum

struct Histogram {
    std::vector<double> edges;    // bins + 1
    std::vector<double> centers;  // bins
    std::vector<double> density;  // integrates to 1 over the range
    std::vector<double> mass;     // sums to 1
    std::vector<double> smoothed; // 3-bin moving average of density
    std::vector<std::size_t> modes;
    std::size_t outside = 0;      // draws outside an explicit range, excluded from the masses

    bool is_mode(std::size_t bin) const;
};

/// Normalized histogram with equal-width bins over `range` (default: the
/// sample range). Modes are local maxima of the smoothed density whose
/// topographic prominence is at least kModeProminence of the global maximum.
Histogram density_histogram(const std::vector<double>& draws, std::size_t bins,
                            std::optional<std::pair<double, double>> range = std::nullopt);

/// Indices of modes of an arbitrary smoothed profile under the same rule.
std::vector<std::size_t> detect_modes(const std::vector<double>& profile, double prominence = kModeProminence);

}  // namespace gebs
