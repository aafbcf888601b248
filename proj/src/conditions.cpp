#include "qsd/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qsd/errors.hpp"
#include "qsd/format.hpp"
#include "qsd/parallel.hpp"
#include "qsd/rng.hpp"

namespace qsd {

namespace {

// Running worst violation. Ties keep the earliest witness, which makes the
// ordered merge of per-slice results deterministic.
struct Worst {
    double violation = 0.0;
    std::vector<ScanCoordinate> witness;
    std::size_t points = 0;

    template <class MakeWitness>
    void offer(double v, MakeWitness&& make)
    {
        if (v > violation) {
            violation = v;
            witness = make();
        }
    }

    void merge(const Worst& other)
    {
        if (other.violation > violation) {
            violation = other.violation;
            witness = other.witness;
        }
        points += other.points;
    }
};

ConditionReport finish(ConditionId id, const Worst& w, double tolerance)
{
    return ConditionReport{id, w.violation <= tolerance, w.violation, w.witness, w.points, false};
}

void require_axis(const std::vector<double>& axis, const char* name)
{
    if (axis.size() < 2) {
        throw DomainError(std::string("scan axis ") + name + " needs at least two points");
    }
    for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
        if (!(axis[i] < axis[i + 1]) || !(axis[i] >= 0.0)) {
            throw DomainError(std::string("scan axis ") + name +
                              " must be nonnegative and strictly increasing");
        }
    }
}

double ratio_or_nan(double num, double den) { return den > 0.0 ? num / den : std::nan(""); }

// rho(s, x) nonincreasing in s.
ConditionReport scan_c2(const TransitionCdf& rho, const ConditionScan& scan, double tol)
{
    Worst w;
    for (double x : scan.x) {
        double prev = rho(scan.s[0], x);
        for (std::size_t k = 0; k + 1 < scan.s.size(); ++k) {
            const double next = rho(scan.s[k + 1], x);
            w.offer(next - prev, [&] {
                return std::vector<ScanCoordinate>{{"s", scan.s[k]}, {"s_next", scan.s[k + 1]}, {"x", x}};
            });
            prev = next;
            ++w.points;
        }
    }
    return finish(ConditionId::C2, w, tol);
}

// rho(t s, t x) nondecreasing in t.
ConditionReport scan_c3(const TransitionCdf& rho, const ConditionScan& scan, double tol)
{
    std::vector<Worst> slices(scan.s.size());
    parallel_for(scan.s.size(), [&](std::size_t i) {
        const double s = scan.s[i];
        Worst& w = slices[i];
        for (double x : scan.x) {
            double prev = rho(scan.t[0] * s, scan.t[0] * x);
            for (std::size_t k = 0; k + 1 < scan.t.size(); ++k) {
                const double t1 = scan.t[k + 1];
                const double next = rho(t1 * s, t1 * x);
                w.offer(prev - next, [&] {
                    return std::vector<ScanCoordinate>{
                        {"s", s}, {"x", x}, {"t", scan.t[k]}, {"t_next", t1}};
                });
                prev = next;
                ++w.points;
            }
        }
    });
    Worst total;
    for (const auto& w : slices) {
        total.merge(w);
    }
    return finish(ConditionId::C3, total, tol);
}

// rho(s, x) / rho(s, A) nonincreasing in s, x <= A.
ConditionReport scan_c4(const TransitionCdf& rho, const ConditionScan& scan, double tol)
{
    const std::size_t ns = scan.s.size();
    std::vector<std::vector<double>> at_x(ns), at_a(ns);
    parallel_for(ns, [&](std::size_t i) {
        at_x[i].reserve(scan.x.size());
        at_a[i].reserve(scan.A.size());
        for (double x : scan.x) {
            at_x[i].push_back(rho(scan.s[i], x));
        }
        for (double a : scan.A) {
            at_a[i].push_back(rho(scan.s[i], a));
        }
    });

    Worst w;
    for (std::size_t ia = 0; ia < scan.A.size(); ++ia) {
        for (std::size_t ix = 0; ix < scan.x.size() && scan.x[ix] <= scan.A[ia]; ++ix) {
            for (std::size_t k = 0; k + 1 < ns; ++k) {
                const double r0 = ratio_or_nan(at_x[k][ix], at_a[k][ia]);
                const double r1 = ratio_or_nan(at_x[k + 1][ix], at_a[k + 1][ia]);
                if (std::isnan(r0) || std::isnan(r1)) {
                    continue;
                }
                w.offer(r1 - r0, [&] {
                    return std::vector<ScanCoordinate>{{"x", scan.x[ix]},
                                                       {"A", scan.A[ia]},
                                                       {"s", scan.s[k]},
                                                       {"s_next", scan.s[k + 1]}};
                });
                ++w.points;
            }
        }
    }
    return finish(ConditionId::C4, w, tol);
}

// rho(t s, t x) / rho(t s, t A) nondecreasing in t, x <= A.
ConditionReport scan_c5(const TransitionCdf& rho, const ConditionScan& scan, double tol)
{
    const std::size_t nt = scan.t.size();
    std::vector<Worst> slices(scan.s.size());
    parallel_for(scan.s.size(), [&](std::size_t i) {
        const double s = scan.s[i];
        std::vector<std::vector<double>> at_x(nt), at_a(nt);
        for (std::size_t k = 0; k < nt; ++k) {
            const double t = scan.t[k];
            for (double x : scan.x) {
                at_x[k].push_back(rho(t * s, t * x));
            }
            for (double a : scan.A) {
                at_a[k].push_back(rho(t * s, t * a));
            }
        }
        Worst& w = slices[i];
        for (std::size_t ia = 0; ia < scan.A.size(); ++ia) {
            for (std::size_t ix = 0; ix < scan.x.size() && scan.x[ix] <= scan.A[ia]; ++ix) {
                for (std::size_t k = 0; k + 1 < nt; ++k) {
                    const double r0 = ratio_or_nan(at_x[k][ix], at_a[k][ia]);
                    const double r1 = ratio_or_nan(at_x[k + 1][ix], at_a[k + 1][ia]);
                    if (std::isnan(r0) || std::isnan(r1)) {
                        continue;
                    }
                    w.offer(r0 - r1, [&] {
                        return std::vector<ScanCoordinate>{{"s", s},
                                                           {"x", scan.x[ix]},
                                                           {"A", scan.A[ia]},
                                                           {"t", scan.t[k]},
                                                           {"t_next", scan.t[k + 1]}};
                    });
                    ++w.points;
                }
            }
        }
    });
    Worst total;
    for (const auto& w : slices) {
        total.merge(w);
    }
    return finish(ConditionId::C5, total, tol);
}

// F(t x) / F(t A) nondecreasing in t, x <= A.
ConditionReport scan_d2(const InnovationDistribution& F, const ConditionScan& scan, double tol)
{
    const std::size_t nt = scan.t.size();
    std::vector<std::vector<double>> at_x(nt), at_a(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        for (double x : scan.x) {
            at_x[k].push_back(F.cdf(scan.t[k] * x));
        }
        for (double a : scan.A) {
            at_a[k].push_back(F.cdf(scan.t[k] * a));
        }
    }
    Worst w;
    for (std::size_t ia = 0; ia < scan.A.size(); ++ia) {
        for (std::size_t ix = 0; ix < scan.x.size() && scan.x[ix] <= scan.A[ia]; ++ix) {
            for (std::size_t k = 0; k + 1 < nt; ++k) {
                const double r0 = ratio_or_nan(at_x[k][ix], at_a[k][ia]);
                const double r1 = ratio_or_nan(at_x[k + 1][ix], at_a[k + 1][ia]);
                if (std::isnan(r0) || std::isnan(r1)) {
                    continue;
                }
                w.offer(r0 - r1, [&] {
                    return std::vector<ScanCoordinate>{{"x", scan.x[ix]},
                                                       {"A", scan.A[ia]},
                                                       {"t", scan.t[k]},
                                                       {"t_next", scan.t[k + 1]}};
                });
                ++w.points;
            }
        }
    }
    return finish(ConditionId::D2, w, tol);
}

// phi positive and nondecreasing (D3), t / phi(t) nondecreasing (D4), scanned over the s axis.
ConditionReport scan_phi(const PhiFunction& phi, ConditionId id, const std::vector<double>& axis,
                         double tol)
{
    auto value = [&](double t) { return id == ConditionId::D3 ? phi(t) : t / phi(t); };
    Worst w;
    if (id == ConditionId::D3) {
        for (double t : axis) {
            if (!(phi(t) > 0.0)) {
                // Positivity failure is reported as a unit-sized violation.
                w.offer(1.0, [&] { return std::vector<ScanCoordinate>{{"t", t}}; });
            }
        }
    }
    double prev = value(axis[0]);
    for (std::size_t k = 0; k + 1 < axis.size(); ++k) {
        const double next = value(axis[k + 1]);
        w.offer(prev - next, [&] {
            return std::vector<ScanCoordinate>{{"t", axis[k]}, {"t_next", axis[k + 1]}};
        });
        prev = next;
        ++w.points;
    }
    return finish(id, w, tol);
}

ConditionReport scan_d5(const MultiplicativeKernel& kernel, const ConditionScan& scan, double tol)
{
    if (scan.d5_paths == 0 || scan.d5_steps == 0 || !(scan.d5_initial_state > 0.0)) {
        throw DomainError("D5 heuristic needs paths, steps and a positive initial state");
    }
    const double floor = scan.d5_collapse_ratio * scan.d5_initial_state;
    std::vector<unsigned char> collapsed(scan.d5_paths, 0);
    parallel_for(scan.d5_paths, [&](std::size_t p) {
        RandomStream rng(scan.d5_seed, p);
        double m = scan.d5_initial_state;
        for (std::size_t n = 0; n < scan.d5_steps; ++n) {
            m = sample_step(kernel, m, rng.uniform());
            if (!(m >= floor)) {
                collapsed[p] = 1;
                return;
            }
            if (std::isinf(m)) {
                return;
            }
        }
    });
    std::size_t count = 0;
    for (auto c : collapsed) {
        count += c;
    }
    const double fraction = static_cast<double>(count) / static_cast<double>(scan.d5_paths);
    const double violation = std::max(0.0, fraction - scan.d5_max_fraction);
    ConditionReport r{ConditionId::D5Heuristic,
                      violation <= tol,
                      violation,
                      {{"collapsed_fraction", fraction},
                       {"paths", static_cast<double>(scan.d5_paths)},
                       {"steps", static_cast<double>(scan.d5_steps)}},
                      scan.d5_paths * scan.d5_steps,
                      true};
    return r;
}

} // namespace

std::string_view to_string(ConditionId id)
{
    switch (id) {
    case ConditionId::C2: return "C2";
    case ConditionId::C3: return "C3";
    case ConditionId::C4: return "C4";
    case ConditionId::C5: return "C5";
    case ConditionId::D2: return "D2";
    case ConditionId::D3: return "D3";
    case ConditionId::D4: return "D4";
    case ConditionId::D5Heuristic: return "D5-heuristic";
    }
    return "?";
}

std::optional<ConditionId> parse_condition_id(std::string_view text)
{
    for (auto id : {ConditionId::C2, ConditionId::C3, ConditionId::C4, ConditionId::C5,
                    ConditionId::D2, ConditionId::D3, ConditionId::D4, ConditionId::D5Heuristic}) {
        if (to_string(id) == text) {
            return id;
        }
    }
    return std::nullopt;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n)
{
    if (!(lo > 0.0) || !(hi > lo) || n < 2) {
        throw DomainError("log_spaced: need 0 < lo < hi and n >= 2");
    }
    std::vector<double> v(n);
    const double a = std::log(lo);
    const double h = (std::log(hi) - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::exp(a + h * static_cast<double>(i));
    }
    v.front() = lo;
    v.back() = hi;
    return v;
}

ConditionScan default_scan(const MultiplicativeKernel& kernel, std::size_t points)
{
    const double lo = std::max(1e-3, kernel.state_space_floor);
    const double hi = std::max(1e3, 10.0 * lo);
    ConditionScan scan;
    scan.s = log_spaced(lo, hi, points);
    scan.x = scan.s;
    scan.A = scan.s;
    scan.t = log_spaced(1e-2, 1e2, points);
    return scan;
}

std::string ConditionReport::witness_text() const
{
    std::string out;
    for (const auto& c : witness) {
        if (!out.empty()) {
            out += ';';
        }
        out += c.name + "=" + format_real(c.value);
    }
    return out;
}

ConditionReport check_transition_condition(const TransitionCdf& rho, ConditionId id,
                                           const ConditionScan& scan, double tolerance)
{
    switch (id) {
    case ConditionId::C2:
        require_axis(scan.s, "s");
        require_axis(scan.x, "x");
        return scan_c2(rho, scan, tolerance);
    case ConditionId::C3:
        require_axis(scan.s, "s");
        require_axis(scan.x, "x");
        require_axis(scan.t, "t");
        return scan_c3(rho, scan, tolerance);
    case ConditionId::C4:
        require_axis(scan.s, "s");
        require_axis(scan.x, "x");
        require_axis(scan.A, "A");
        return scan_c4(rho, scan, tolerance);
    case ConditionId::C5:
        require_axis(scan.s, "s");
        require_axis(scan.x, "x");
        require_axis(scan.A, "A");
        require_axis(scan.t, "t");
        return scan_c5(rho, scan, tolerance);
    default:
        throw std::invalid_argument("check_transition_condition handles C2..C5 only");
    }
}

ConditionReport check_condition(const MultiplicativeKernel& kernel, ConditionId id,
                                const ConditionScan& scan, double tolerance)
{
    switch (id) {
    case ConditionId::D2:
        require_axis(scan.t, "t");
        require_axis(scan.x, "x");
        require_axis(scan.A, "A");
        return scan_d2(kernel.innovation, scan, tolerance);
    case ConditionId::D3:
    case ConditionId::D4:
        require_axis(scan.s, "s");
        return scan_phi(kernel.phi, id, scan.s, tolerance);
    case ConditionId::D5Heuristic:
        return scan_d5(kernel, scan, tolerance);
    default:
        return check_transition_condition(
            [&kernel](double s, double x) { return rho_eval(kernel, s, x); }, id, scan, tolerance);
    }
}

std::vector<ConditionReport> check_all_conditions(const MultiplicativeKernel& kernel,
                                                  const ConditionScan& scan, double tolerance,
                                                  bool include_heuristic)
{
    std::vector<ConditionReport> out;
    for (auto id : kRequiredConditions) {
        out.push_back(check_condition(kernel, id, scan, tolerance));
    }
    if (include_heuristic) {
        out.push_back(check_condition(kernel, ConditionId::D5Heuristic, scan, tolerance));
    }
    return out;
}

bool required_conditions_passed(const std::vector<ConditionReport>& reports)
{
    for (auto id : kRequiredConditions) {
        const auto it = std::find_if(reports.begin(), reports.end(),
                                     [id](const ConditionReport& r) { return r.id == id; });
        if (it == reports.end() || !it->passed) {
            return false;
        }
    }
    return true;
}

} // namespace qsd
