#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsd/kernel.hpp"

namespace qsd {

enum class ConditionId { C2, C3, C4, C5, D2, D3, D4, D5Heuristic };

/// Conditions whose failure voids the monotonicity results. The D5 scan is a
/// simulation heuristic and is reported alongside, never required.
inline constexpr std::array<ConditionId, 7> kRequiredConditions = {
    ConditionId::C2, ConditionId::C3, ConditionId::C4, ConditionId::C5,
    ConditionId::D2, ConditionId::D3, ConditionId::D4};

std::string_view to_string(ConditionId id);
std::optional<ConditionId> parse_condition_id(std::string_view text);

struct ScanCoordinate {
    std::string name;
    double value;
};

/// Finite grids standing in for "for all s, t, x, A". Each axis must be
/// strictly increasing and inside the kernel domain.
struct ConditionScan {
    std::vector<double> s;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> A;

    // Collapse heuristic: fraction of unconditioned paths that fall below
    // collapse_ratio * initial_state within n_steps.
    std::size_t d5_paths = 1000;
    std::size_t d5_steps = 10000;
    double d5_initial_state = 1.0;
    double d5_collapse_ratio = 1e-12;
    double d5_max_fraction = 0.01;
    std::uint64_t d5_seed = 0x5eedULL;
};

std::vector<double> log_spaced(double lo, double hi, std::size_t n);

/// 64 log-spaced points per axis: s, x, A over [1e-3, 1e3] (raised to the
/// kernel's floor when that is larger) and t over [1e-2, 1e2].
ConditionScan default_scan(const MultiplicativeKernel& kernel, std::size_t points = 64);

struct ConditionReport {
    ConditionId id;
    bool passed;
    /// Largest wrong-direction increment between adjacent scan points.
    double worst_violation;
    std::vector<ScanCoordinate> witness;
    std::size_t points_scanned;
    bool heuristic = false;

    /// "s=0.1;s_next=0.2;x=1", empty when nothing was violated.
    std::string witness_text() const;
};

inline constexpr double kDefaultMonotonicityTolerance = 1e-9;

/// Generic transition CDF rho(s, x), for the C-conditions on arbitrary kernels.
using TransitionCdf = std::function<double(double s, double x)>;

/// C2..C5 on an arbitrary transition CDF. Other ids throw std::invalid_argument.
ConditionReport check_transition_condition(const TransitionCdf& rho, ConditionId id,
                                           const ConditionScan& scan,
                                           double tolerance = kDefaultMonotonicityTolerance);

ConditionReport check_condition(const MultiplicativeKernel& kernel, ConditionId id,
                                const ConditionScan& scan,
                                double tolerance = kDefaultMonotonicityTolerance);

/// Required conditions in kRequiredConditions order, plus the D5 heuristic last
/// when include_heuristic is set.
std::vector<ConditionReport> check_all_conditions(const MultiplicativeKernel& kernel,
                                                  const ConditionScan& scan,
                                                  double tolerance = kDefaultMonotonicityTolerance,
                                                  bool include_heuristic = true);

bool required_conditions_passed(const std::vector<ConditionReport>& reports);

} // namespace qsd
