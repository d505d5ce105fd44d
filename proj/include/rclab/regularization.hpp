#pragma once

// The saturating regularization F_eps(s) = ln(1 + eps*s) / eps and the truncation
// family phi_E(v) = v*phi((v-E)/E) + 3E*(1 - phi((v-E)/E)) built from a cutoff profile.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rclab/error.hpp"

namespace rclab {

class Regularization {
public:
    explicit Regularization(double epsilon) : epsilon_(epsilon) {
        if (!(epsilon > 0.0 && epsilon <= 1.0)) {
            throw InvalidArgument("regularization: epsilon must lie in (0, 1], got " + std::to_string(epsilon));
        }
    }

    double epsilon() const noexcept { return epsilon_; }

    /// F_eps(s). The result is kept within [0, s]; log1p is exact to an ulp, so this
    /// only settles rounding for tiny eps*s.
    double f(double s) const {
        check(s, "f_eps");
        return std::min(s, std::log1p(epsilon_ * s) / epsilon_);
    }

    /// F'_eps(s) = 1 / (1 + eps*s), in (0, 1].
    double f_prime(double s) const {
        check(s, "f_eps_prime");
        return 1.0 / (1.0 + epsilon_ * s);
    }

    /// s * F'_eps(s) = s / (1 + eps*s), the chemotactic drift coefficient. Written as
    /// (x/(1+x))/eps so the bound 1/eps also holds in floating point.
    double drift(double s) const {
        check(s, "drift");
        const double x = epsilon_ * s;
        return (x / (1.0 + x)) / epsilon_;
    }

private:
    static void check(double s, const char* op) {
        if (!(s >= 0.0)) throw InvalidArgument(std::string(op) + ": argument must be nonnegative");
    }

    double epsilon_;
};

/// Nonincreasing cutoff with value 1 on (-inf, 0] and 0 on [1, inf).
///
/// The smooth profile is phi(x) = q(1-x) / (q(1-x) + q(x)), q(x) = exp(-1/x) for x > 0,
/// evaluated in the equivalent logistic form sigma(1/x - 1/(1-x)). The step profile
/// (jump at x = 1/2, derivatives reported as 0) exists as a negative control for the
/// smoothness check.
class CutoffProfile {
public:
    enum class Kind { smooth, step };

    static CutoffProfile smooth() { return CutoffProfile(Kind::smooth); }
    static CutoffProfile step() { return CutoffProfile(Kind::step); }

    Kind kind() const noexcept { return kind_; }
    const char* name() const noexcept { return kind_ == Kind::smooth ? "smooth" : "step"; }

    double value(double x) const {
        if (x <= 0.0) return 1.0;
        if (x >= 1.0) return 0.0;
        if (kind_ == Kind::step) return x < 0.5 ? 1.0 : 0.0;
        return logistic(argument(x));
    }

    double first(double x) const {
        if (kind_ == Kind::step || x <= 0.0 || x >= 1.0) return 0.0;
        const double w = logistic_slope(argument(x));
        if (w == 0.0) return 0.0;
        return w * argument_prime(x);
    }

    double second(double x) const {
        if (kind_ == Kind::step || x <= 0.0 || x >= 1.0) return 0.0;
        const double z = argument(x);
        const double w = logistic_slope(z);
        if (w == 0.0) return 0.0;
        const double zp = argument_prime(x);
        const double zpp = 2.0 / (x * x * x) - 2.0 / ((1.0 - x) * (1.0 - x) * (1.0 - x));
        return w * (1.0 - 2.0 * logistic(z)) * zp * zp + w * zpp;
    }

private:
    explicit CutoffProfile(Kind kind) : kind_(kind) {}

    static double argument(double x) { return 1.0 / x - 1.0 / (1.0 - x); }
    static double argument_prime(double x) { return -1.0 / (x * x) - 1.0 / ((1.0 - x) * (1.0 - x)); }

    static double logistic(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    // sigma(z) * (1 - sigma(z)); underflows to exactly 0 in the guard band near x in {0, 1}.
    static double logistic_slope(double z) {
        const double e = std::exp(-std::abs(z));
        return e / ((1.0 + e) * (1.0 + e));
    }

    Kind kind_;
};

/// The family phi_E over a ladder of levels, with the measured axiom constants
/// K1 >= sup v|phi_E''(v)| and K2 >= sup |phi_E'(v)|.
class TruncationFamily {
public:
    TruncationFamily(CutoffProfile profile, std::vector<double> levels) : profile_(profile), levels_(std::move(levels)) {
        if (levels_.empty()) throw InvalidArgument("truncation family: no levels");
        for (double e : levels_) {
            if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("truncation family: levels must be positive");
        }
        std::sort(levels_.begin(), levels_.end());
        levels_.erase(std::unique(levels_.begin(), levels_.end()), levels_.end());
        measure_constants();
    }

    /// Levels 2^k for k = first..last.
    static TruncationFamily dyadic(CutoffProfile profile, int first = 1, int last = 10) {
        std::vector<double> levels;
        for (int k = first; k <= last; ++k) levels.push_back(std::ldexp(1.0, k));
        return TruncationFamily(profile, std::move(levels));
    }

    const CutoffProfile& profile() const noexcept { return profile_; }
    const std::vector<double>& levels() const noexcept { return levels_; }
    double k1() const noexcept { return k1_; }
    double k2() const noexcept { return k2_; }

    bool has_level(double e) const { return std::binary_search(levels_.begin(), levels_.end(), e); }

    double value(double e, double v) const {
        check(e, v);
        return value_unchecked(e, v);
    }
    double prime(double e, double v) const {
        check(e, v);
        return prime_unchecked(e, v);
    }
    double second(double e, double v) const {
        check(e, v);
        return second_unchecked(e, v);
    }

    // Evaluators for any positive level; callers guarantee e > 0 and v >= 0.
    double value_unchecked(double e, double v) const {
        const double p = profile_.value((v - e) / e);
        return v * p + 3.0 * e * (1.0 - p);
    }
    double prime_unchecked(double e, double v) const {
        const double s = (v - e) / e;
        return profile_.value(s) + (s - 2.0) * profile_.first(s);
    }
    double second_unchecked(double e, double v) const {
        const double s = (v - e) / e;
        return (2.0 * profile_.first(s) + (s - 2.0) * profile_.second(s)) / e;
    }

private:
    void check(double e, double v) const {
        if (!(v >= 0.0)) throw InvalidArgument("truncation: argument must be nonnegative");
        if (!has_level(e)) throw InvalidArgument("truncation: level " + std::to_string(e) + " is not in the family");
    }

    // phi_E is self-similar in v/E: v|phi_E''(v)| = (1+s)|H(s)| and phi_E'(v) = phi(s) + (s-2)phi'(s)
    // with s = v/E - 1, so one scan of s in [0, 1] gives both constants for every level.
    void measure_constants() {
        auto k1_at = [&](double s) {
            return (1.0 + s) * std::abs(2.0 * profile_.first(s) + (s - 2.0) * profile_.second(s));
        };
        auto k2_at = [&](double s) { return std::abs(profile_.value(s) + (s - 2.0) * profile_.first(s)); };
        k1_ = scan_max(k1_at);
        k2_ = std::max(1.0, scan_max(k2_at));
    }

    template <class F>
    static double scan_max(F&& f) {
        constexpr std::size_t n = 200000;
        double best = 0.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double val = f(static_cast<double>(i) / n);
            if (val > best) {
                best = val;
                best_i = i;
            }
        }
        // golden-section refinement inside the bracketing cells
        double lo = static_cast<double>(best_i == 0 ? 0 : best_i - 1) / n;
        double hi = static_cast<double>(std::min(best_i + 1, n)) / n;
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - r * (hi - lo);
        double b = lo + r * (hi - lo);
        for (int it = 0; it < 80; ++it) {
            if (f(a) > f(b)) {
                hi = b;
                b = a;
                a = hi - r * (hi - lo);
            } else {
                lo = a;
                a = b;
                b = lo + r * (hi - lo);
            }
        }
        best = std::max({best, f(a), f(b)});
        return best;
    }

    CutoffProfile profile_;
    std::vector<double> levels_;
    double k1_ = 0.0;
    double k2_ = 1.0;
};

struct AxiomCheck {
    std::string axiom;        // "E1" ... "E7"
    std::string description;
    bool passed = false;
    double worst = 0.0;       // extremal measured quantity
    double witness_v = 0.0;   // sample realising it
    double witness_level = 0.0;
    std::string detail;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    /// sup over samples v <= K of |phi_E''(v)|, per K (outer) and level (inner).
    std::vector<double> k_values;
    std::vector<std::vector<double>> sup_second_below_k;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed; });
    }
    const AxiomCheck& get(const std::string& axiom) const {
        for (const auto& c : checks)
            if (c.axiom == axiom) return c;
        throw InvalidArgument("axiom report: no check named " + axiom);
    }
};

/// Default sample grid: 6001 uniform points on [0, 3E] for every level, merged and sorted.
inline std::vector<double> default_truncation_samples(const TruncationFamily& fam, std::size_t per_level = 6000) {
    std::vector<double> samples;
    for (double e : fam.levels()) {
        for (std::size_t i = 0; i <= per_level; ++i) samples.push_back(3.0 * e * static_cast<double>(i) / per_level);
    }
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
    return samples;
}

/// sup over samples v <= k of |phi_E''(v)| for one level.
inline double sup_second_below(const TruncationFamily& fam, double e, std::span<const double> samples, double k) {
    double m = 0.0;
    for (double v : samples) {
        if (v > k) continue;
        m = std::max(m, std::abs(fam.second_unchecked(e, v)));
    }
    return m;
}

namespace detail {

// Tolerances of the C^2 check. Between consecutive samples a, b (gap g) a C^2 function
// obeys the trapezoid bounds
//   |phi(b) - phi(a) - g/2 (phi'(a) + phi'(b))|   <= g^3/12 sup|phi'''|
//   |phi'(b) - phi'(a) - g/2 (phi''(a) + phi''(b))| <= g^3/12 sup|phi''''|
// For phi_E, sup|phi'''| and sup|phi''''| scale as E^-2 and E^-3. kSmoothnessBound caps the
// scaled constants; a jump or kink leaves an O(E) resp. O(1) defect regardless of g.
inline constexpr double kSmoothnessBound = 1.0e4;
inline constexpr double kRoundoffAllowance = 1.0e-12;

}  // namespace detail

inline AxiomReport verify_truncation_axioms(const TruncationFamily& fam, std::vector<double> samples,
                                            std::vector<double> k_list = {1.0, 10.0, 100.0}) {
    if (samples.empty()) throw InvalidArgument("verify_truncation_axioms: empty sample grid");
    for (double v : samples) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("verify_truncation_axioms: samples must be nonnegative");
    }
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

    const auto& levels = fam.levels();
    AxiomReport report;

    // E1: C^2 consistency of value, first and second derivative between neighbours.
    {
        AxiomCheck c{"E1", "phi_E in C^2 (trapezoid consistency of phi_E, phi_E', phi_E'')", false, 0.0, 0.0, 0.0, {}};
        double worst = 0.0;
        for (double e : levels) {
            for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
                const double a = samples[j];
                const double b = samples[j + 1];
                const double g = b - a;
                const double d0 = fam.value_unchecked(e, b) - fam.value_unchecked(e, a) -
                                  0.5 * g * (fam.prime_unchecked(e, a) + fam.prime_unchecked(e, b));
                const double d1 = fam.prime_unchecked(e, b) - fam.prime_unchecked(e, a) -
                                  0.5 * g * (fam.second_unchecked(e, a) + fam.second_unchecked(e, b));
                const double g3 = g * g * g;
                const double tol0 = detail::kSmoothnessBound * g3 / (12.0 * e * e) + detail::kRoundoffAllowance * e;
                const double tol1 = detail::kSmoothnessBound * g3 / (12.0 * e * e * e) + detail::kRoundoffAllowance;
                const double ratio = std::max(std::abs(d0) / tol0, std::abs(d1) / tol1);
                if (ratio > worst) {
                    worst = ratio;
                    c.witness_v = a;
                    c.witness_level = e;
                }
            }
        }
        c.worst = worst;
        c.passed = worst <= 1.0;
        c.detail = "max defect / tolerance = " + std::to_string(worst);
        report.checks.push_back(c);
    }

    // E2: v|phi_E''(v)| <= K1.
    {
        AxiomCheck c{"E2", "v|phi_E''(v)| <= K1", false, 0.0, 0.0, 0.0, {}};
        for (double e : levels)
            for (double v : samples) {
                const double q = v * std::abs(fam.second_unchecked(e, v));
                if (q > c.worst) {
                    c.worst = q;
                    c.witness_v = v;
                    c.witness_level = e;
                }
            }
        c.passed = c.worst <= fam.k1() * (1.0 + 1e-12);
        c.detail = "K1 = " + std::to_string(fam.k1());
        report.checks.push_back(c);
    }

    // E3: supp phi_E' within [0, 2E] and supp phi_E'' within [E, 2E].
    {
        AxiomCheck c{"E3", "supp D phi_E bounded: phi_E' = 0 above 2E, phi_E'' = 0 outside [E, 2E]", false, 0.0, 0.0, 0.0, {}};
        c.passed = true;
        for (double e : levels)
            for (double v : samples) {
                const double d1 = fam.prime_unchecked(e, v);
                const double d2 = fam.second_unchecked(e, v);
                const bool bad = (v >= 2.0 * e && (d1 != 0.0 || d2 != 0.0)) || (v <= e && d2 != 0.0);
                if (bad) {
                    c.passed = false;
                    c.worst = std::max(std::abs(d1), std::abs(d2));
                    c.witness_v = v;
                    c.witness_level = e;
                }
            }
        report.checks.push_back(c);
    }

    // E4: phi_E'(v) -> 1; on the ladder it is exactly 1 for every level above v.
    {
        AxiomCheck c{"E4", "phi_E'(v) = 1 for all levels E > v", false, 0.0, 0.0, 0.0, {}};
        c.passed = true;
        std::size_t covered = 0;
        for (double v : samples) {
            bool any = false;
            for (double e : levels) {
                if (e <= v) continue;
                any = true;
                const double d = std::abs(fam.prime_unchecked(e, v) - 1.0);
                if (d > c.worst) {
                    c.worst = d;
                    c.witness_v = v;
                    c.witness_level = e;
                }
            }
            covered += any ? 1 : 0;
        }
        c.passed = c.worst == 0.0 && covered > 0;
        c.detail = std::to_string(covered) + " samples lie below the top level";
        report.checks.push_back(c);
    }

    // E5: |phi_E'| <= K2.
    {
        AxiomCheck c{"E5", "|phi_E'(v)| <= K2", false, 0.0, 0.0, 0.0, {}};
        for (double e : levels)
            for (double v : samples) {
                const double q = std::abs(fam.prime_unchecked(e, v));
                if (q > c.worst) {
                    c.worst = q;
                    c.witness_v = v;
                    c.witness_level = e;
                }
            }
        c.passed = c.worst <= fam.k2() * (1.0 + 1e-12);
        c.detail = "K2 = " + std::to_string(fam.k2());
        report.checks.push_back(c);
    }

    // E6: phi_E(v) == v bit-exactly for v < E.
    {
        AxiomCheck c{"E6", "phi_E(v) = v exactly for v < E", false, 0.0, 0.0, 0.0, {}};
        c.passed = true;
        std::size_t checked = 0;
        for (double e : levels)
            for (double v : samples) {
                if (v >= e) break;
                ++checked;
                const double val = fam.value_unchecked(e, v);
                if (val != v) {
                    c.passed = false;
                    c.worst = std::max(c.worst, std::abs(val - v));
                    c.witness_v = v;
                    c.witness_level = e;
                }
            }
        c.detail = std::to_string(checked) + " (level, sample) pairs checked";
        report.checks.push_back(c);
    }

    // E7: sup_{v<=K} |phi_E''| strictly decreasing along the ladder, then exactly 0.
    {
        AxiomCheck c{"E7", "sup_{v<=K}|phi_E''(v)| strictly decreasing, then exactly 0", false, 0.0, 0.0, 0.0, {}};
        c.passed = true;
        report.k_values = k_list;
        for (double k : k_list) {
            std::vector<double> sups;
            for (double e : levels) sups.push_back(sup_second_below(fam, e, samples, k));
            bool zero_seen = false;
            for (std::size_t i = 0; i < sups.size(); ++i) {
                if (sups[i] == 0.0) {
                    zero_seen = true;
                    continue;
                }
                const bool not_decreasing = i > 0 && !(sups[i] < sups[i - 1]);
                if (zero_seen || not_decreasing) {
                    c.passed = false;
                    c.witness_v = k;
                    c.witness_level = levels[i];
                    c.worst = sups[i];
                    c.detail += "K=" + std::to_string(k) + " not monotone at E=" + std::to_string(levels[i]) + "; ";
                }
            }
            if (!zero_seen) {
                c.passed = false;
                c.witness_v = k;
                c.detail += "K=" + std::to_string(k) + " ladder never reaches 0; ";
            }
            report.sup_second_below_k.push_back(std::move(sups));
        }
        report.checks.push_back(c);
    }
    return report;
}

}  // namespace rclab
