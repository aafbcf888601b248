#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qsd {

enum class GridKind { uniform, geometric };

std::string to_string(GridKind kind);

/// Partition of [lower, A] into cells. points[i] is the collocation state of
/// cell i: arithmetic midpoint for uniform grids, geometric midpoint otherwise.
struct GridSpec {
    GridKind kind = GridKind::uniform;
    std::vector<double> edges;
    std::vector<double> points;

    std::size_t n_cells() const noexcept { return points.size(); }
    double lower() const { return edges.front(); }
    double upper() const { return edges.back(); }
};

GridSpec make_grid(GridKind kind, std::size_t n_cells, double lower, double upper);

/// Threshold-independent grid recipe; `lower` defaults to max(floor, A * 1e-8)
/// for geometric grids and to the floor for uniform ones.
struct GridTemplate {
    GridKind kind = GridKind::geometric;
    std::size_t n_cells = 400;
    std::optional<double> lower;
};

inline constexpr double kDefaultLowerFraction = 1e-8;

GridSpec grid_for_threshold(const GridTemplate& tmpl, double A, double state_space_floor);

/// Same template for threshold y*A: an explicit lower edge scales by y.
GridTemplate scaled(const GridTemplate& tmpl, double y);

} // namespace qsd
