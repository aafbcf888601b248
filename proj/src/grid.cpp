#include "qsd/grid.hpp"

#include <algorithm>
#include <cmath>

#include "qsd/errors.hpp"

namespace qsd {

std::string to_string(GridKind kind) { return kind == GridKind::uniform ? "uniform" : "geometric"; }

GridSpec make_grid(GridKind kind, std::size_t n_cells, double lower, double upper)
{
    if (n_cells < 1) {
        throw DomainError("grid needs at least one cell");
    }
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower >= 0.0) || !(upper > lower)) {
        throw DomainError("grid needs 0 <= lower < upper");
    }
    if (kind == GridKind::geometric && !(lower > 0.0)) {
        throw DomainError("geometric grid needs lower > 0");
    }

    GridSpec g;
    g.kind = kind;
    g.edges.resize(n_cells + 1);
    const double n = static_cast<double>(n_cells);
    if (kind == GridKind::uniform) {
        const double h = (upper - lower) / n;
        for (std::size_t j = 0; j <= n_cells; ++j) {
            g.edges[j] = lower + h * static_cast<double>(j);
        }
    } else {
        const double a = std::log(lower);
        const double h = (std::log(upper) - a) / n;
        for (std::size_t j = 0; j <= n_cells; ++j) {
            g.edges[j] = std::exp(a + h * static_cast<double>(j));
        }
    }
    g.edges.front() = lower;
    g.edges.back() = upper;
    for (std::size_t j = 0; j < n_cells; ++j) {
        if (!(g.edges[j] < g.edges[j + 1])) {
            throw DomainError("grid too fine for double resolution");
        }
    }

    g.points.resize(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) {
        const double lo = g.edges[i];
        const double hi = g.edges[i + 1];
        g.points[i] = kind == GridKind::uniform ? 0.5 * (lo + hi) : std::sqrt(lo * hi);
    }
    return g;
}

GridSpec grid_for_threshold(const GridTemplate& tmpl, double A, double state_space_floor)
{
    if (!(A > 0.0)) {
        throw DomainError("threshold A must be > 0");
    }
    double lower;
    if (tmpl.lower) {
        lower = *tmpl.lower;
        if (lower < state_space_floor) {
            throw DomainError("grid lower edge below the state-space floor");
        }
    } else if (tmpl.kind == GridKind::geometric) {
        lower = std::max(state_space_floor, A * kDefaultLowerFraction);
    } else {
        lower = state_space_floor;
    }
    return make_grid(tmpl.kind, tmpl.n_cells, lower, A);
}

GridTemplate scaled(const GridTemplate& tmpl, double y)
{
    GridTemplate out = tmpl;
    if (out.lower) {
        *out.lower *= y;
    }
    return out;
}

} // namespace qsd
