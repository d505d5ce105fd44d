#pragma once

// Space-time quadrature of the integral identities satisfied by the regularized flow:
// the truncated identity obtained by testing the u-equation with psi * phi_E'(u), the
// renormalized identity with xi = phi_E, the weak v-identity, the defect measures
// mu^E and the level measures nu^K, gamma^K.
//
// Spatial integrals use midpoint quadrature with centered gradients; time integrals use
// the trapezoidal rule over the stored snapshots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <numbers>
#include <string>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/grid.hpp"
#include "rclab/regularization.hpp"
#include "rclab/trajectory.hpp"

namespace rclab {

inline constexpr std::size_t kMinSnapshotsInWindow = 16;

struct CosineMode {
    double coefficient = 1.0;
    std::vector<std::size_t> wavenumbers;  // k_a per axis; the mode is prod_a cos(k_a pi x_a / L_a)
};

/// psi(x, t) = S(x) * theta(t), S a finite cosine combination (zero normal derivative on
/// every face), theta(t) = phi((t - t0) / w) with the smooth cutoff: theta = 1 on [0, t0],
/// theta = 0 from t0 + w on.
class TestFunction {
public:
    TestFunction(std::vector<CosineMode> modes, double t0, double width)
        : modes_(std::move(modes)), t0_(t0), width_(width) {
        if (modes_.empty()) throw InvalidArgument("test function: no spatial modes");
        if (!(t0 >= 0.0) || !(width > 0.0)) throw InvalidArgument("test function: need t0 >= 0 and width > 0");
        const std::size_t d = modes_.front().wavenumbers.size();
        for (const auto& m : modes_)
            if (m.wavenumbers.size() != d) throw DimensionMismatch("test function: modes differ in dimension");
    }

    static TestFunction mode(std::vector<std::size_t> k, double t0, double width, double coefficient = 1.0) {
        return TestFunction({CosineMode{coefficient, std::move(k)}}, t0, width);
    }

    /// S == 1 in space.
    static TestFunction constant_in_space(std::size_t dim, double t0, double width) {
        return mode(std::vector<std::size_t>(dim, 0), t0, width);
    }

    const std::vector<CosineMode>& modes() const noexcept { return modes_; }
    double t0() const noexcept { return t0_; }
    double width() const noexcept { return width_; }
    double support_end() const noexcept { return t0_ + width_; }
    std::size_t dim() const noexcept { return modes_.front().wavenumbers.size(); }

    double theta(double t) const { return profile().value((t - t0_) / width_); }
    double theta_dot(double t) const { return profile().first((t - t0_) / width_) / width_; }

    /// a * this + b * other; both must share the temporal factor.
    TestFunction combine(double a, const TestFunction& other, double b) const {
        if (other.t0_ != t0_ || other.width_ != width_) {
            throw InvalidArgument("test function: combination needs equal temporal factors");
        }
        std::vector<CosineMode> m;
        for (auto x : modes_) {
            x.coefficient *= a;
            m.push_back(std::move(x));
        }
        for (auto x : other.modes_) {
            x.coefficient *= b;
            m.push_back(std::move(x));
        }
        return TestFunction(std::move(m), t0_, width_);
    }

    /// S at every cell center.
    std::vector<double> spatial(const TensorGrid& g) const {
        check_dim(g);
        std::vector<double> out(g.size(), 0.0);
        std::vector<double> x(g.dim());
        for (std::size_t c = 0; c < g.size(); ++c) {
            g.center_of(c, x);
            for (const auto& m : modes_) {
                double p = m.coefficient;
                for (std::size_t a = 0; a < g.dim(); ++a) p *= std::cos(wave(m, g, a) * x[a]);
                out[c] += p;
            }
        }
        return out;
    }

    /// grad S at every cell center, one vector per axis.
    std::vector<std::vector<double>> spatial_gradient(const TensorGrid& g) const {
        check_dim(g);
        std::vector<std::vector<double>> out(g.dim(), std::vector<double>(g.size(), 0.0));
        std::vector<double> x(g.dim());
        for (std::size_t c = 0; c < g.size(); ++c) {
            g.center_of(c, x);
            for (const auto& m : modes_) {
                for (std::size_t b = 0; b < g.dim(); ++b) {
                    double p = m.coefficient;
                    for (std::size_t a = 0; a < g.dim(); ++a) {
                        const double k = wave(m, g, a);
                        p *= a == b ? -k * std::sin(k * x[a]) : std::cos(k * x[a]);
                    }
                    out[b][c] += p;
                }
            }
        }
        return out;
    }

    /// Throws unless the temporal transition is resolved by the snapshot times and, when
    /// `compact` is set, psi vanishes at the final time.
    void validate(const std::vector<double>& times, bool compact) const {
        if (times.size() < 2) throw InvalidArgument("test function: trajectory needs at least two snapshots");
        if (compact && support_end() > times.back()) {
            throw InvalidArgument("test function: temporal support must end before the final snapshot");
        }
        const auto inside = std::count_if(times.begin(), times.end(),
                                          [&](double t) { return t >= t0_ && t <= support_end(); });
        if (static_cast<std::size_t>(inside) < kMinSnapshotsInWindow) {
            throw InvalidArgument("test function: temporal transition resolved by " + std::to_string(inside) +
                                  " snapshots, need " + std::to_string(kMinSnapshotsInWindow));
        }
    }

private:
    static const CutoffProfile& profile() {
        static const CutoffProfile p = CutoffProfile::smooth();
        return p;
    }
    static double wave(const CosineMode& m, const TensorGrid& g, std::size_t a) {
        return static_cast<double>(m.wavenumbers[a]) * std::numbers::pi / g.length(a);
    }
    void check_dim(const TensorGrid& g) const {
        if (g.dim() != dim()) throw DimensionMismatch("test function: dimension differs from grid");
    }

    std::vector<CosineMode> modes_;
    double t0_;
    double width_;
};

/// xi = phi_E for one level of a truncation family.
struct Renormalizer {
    const TruncationFamily* family = nullptr;
    double level = 0.0;

    Renormalizer(const TruncationFamily& fam, double e) : family(&fam), level(e) {
        if (!fam.has_level(e)) throw InvalidArgument("renormalizer: level not in family");
    }
    double value(double u) const { return family->value_unchecked(level, u); }
    double prime(double u) const { return family->prime_unchecked(level, u); }
    double second(double u) const { return family->second_unchecked(level, u); }
};

struct IdentityResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double signed_residual() const { return lhs - rhs; }
    double residual() const { return std::abs(lhs - rhs); }
};

struct RenormalizedResidual {
    double lhs = 0.0;
    double rhs_reference = 0.0;      // right side with F'_eps replaced by 1
    double consistency = 0.0;        // (right side with F'_eps) - rhs_reference
    double consistency_bound = 0.0;  // int int u |1 - F'_eps(u)| (|xi''||grad u.grad v||psi| + |xi'||grad v.grad psi|)
    double signed_residual() const { return lhs - rhs_reference; }
    double residual() const { return std::abs(lhs - rhs_reference); }
    /// Residual left after removing the computed consistency term.
    double discretization() const { return std::abs(lhs - rhs_reference - consistency); }
};

struct VWeakResidual {
    double eps_form = 0.0;   // signed, consumption F_eps(u) v
    double zero_form = 0.0;  // signed, consumption u v
    double gap_bound = 0.0;  // int int (u - F_eps(u)) v |psi|
    double eps_residual() const { return std::abs(eps_form); }
    double zero_residual() const { return std::abs(zero_form); }
};

namespace detail {

struct FrameGradients {
    std::vector<ScalarField> grad_u;
    std::vector<ScalarField> grad_v;
};

inline FrameGradients frame_gradients(const Frame& f) {
    return {gradient_centered(f.u), gradient_centered(f.v)};
}

inline double dot_at(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b, std::size_t i) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += a[d][i] * b[d][i];
    return s;
}

inline double dot_at(const std::vector<ScalarField>& a, const std::vector<std::vector<double>>& b, std::size_t i) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += a[d][i] * b[d][i];
    return s;
}

}  // namespace detail

/// Residual of
///   int phi_E(u(T)) psi(T) - int phi_E(u0) psi(0) - int int phi_E(u) psi_t = I + II + III + IV
/// with I = -int int phi_E''(u)|grad u|^2 psi, II = -int int phi_E'(u) grad u . grad psi,
/// III = int int u F'(u) phi_E''(u) (grad u . grad v) psi, IV = int int u F'(u) phi_E'(u) grad v . grad psi.
inline IdentityResidual truncated_identity_residual(const TrajectoryStore& traj, const TruncationFamily& fam, double level,
                                                    const TestFunction& psi) {
    if (!fam.has_level(level)) throw InvalidArgument("truncated_identity_residual: level not in family");
    const auto times = traj.times();
    psi.validate(times, false);
    const TensorGrid& g = traj.grid();
    const Regularization reg(traj.epsilon());
    const auto s = psi.spatial(g);
    const auto ds = psi.spatial_gradient(g);
    const std::size_t n = g.size();

    std::vector<double> time_term(times.size()), rhs_term(times.size());
    std::vector<double> a(n), b(n);
    double first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Frame& f = traj.frames()[k];
        const auto grads = detail::frame_gradients(f);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = f.u[i];
            const double p1 = fam.prime_unchecked(level, u);
            const double p2 = fam.second_unchecked(level, u);
            const double drift = reg.drift(u);
            const double gu2 = detail::dot_at(grads.grad_u, grads.grad_u, i);
            const double guv = detail::dot_at(grads.grad_u, grads.grad_v, i);
            const double gu_s = detail::dot_at(grads.grad_u, ds, i);
            const double gv_s = detail::dot_at(grads.grad_v, ds, i);
            a[i] = fam.value_unchecked(level, u) * s[i];
            b[i] = -p2 * gu2 * s[i] - p1 * gu_s + drift * p2 * guv * s[i] + drift * p1 * gv_s;
        }
        const double ia = detail::integrate_values(g, a);
        const double ib = detail::integrate_values(g, b);
        if (k == 0) first = ia;
        if (k + 1 == traj.size()) last = ia;
        time_term[k] = ia * psi.theta_dot(f.time);
        rhs_term[k] = ib * psi.theta(f.time);
    }
    IdentityResidual r;
    r.lhs = last * psi.theta(times.back()) - first * psi.theta(times.front()) - detail::trapezoid(times, time_term);
    r.rhs = detail::trapezoid(times, rhs_term);
    return r;
}

/// Residual of the renormalized identity
///   -int int xi(u) psi_t - int xi(u0) psi(0) =
///     -int int xi''|grad u|^2 psi - int int xi' grad u.grad psi + int int u xi''(grad u.grad v) psi + int int u xi' grad v.grad psi
/// evaluated on an eps-trajectory. The right side is the eps = 0 form; the consistency
/// term carries the difference to the eps form.
inline RenormalizedResidual renormalized_residual(const TrajectoryStore& traj, const Renormalizer& xi,
                                                  const TestFunction& psi) {
    const auto times = traj.times();
    psi.validate(times, true);
    const TensorGrid& g = traj.grid();
    const Regularization reg(traj.epsilon());
    const auto s = psi.spatial(g);
    const auto ds = psi.spatial_gradient(g);
    const std::size_t n = g.size();

    std::vector<double> time_term(times.size()), rhs_term(times.size()), cons_term(times.size()),
        bound_term(times.size());
    std::vector<double> a(n), b(n), c(n), d(n);
    double first = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Frame& f = traj.frames()[k];
        const auto grads = detail::frame_gradients(f);
        const double th = psi.theta(f.time);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = f.u[i];
            const double x1 = xi.prime(u);
            const double x2 = xi.second(u);
            const double gu2 = detail::dot_at(grads.grad_u, grads.grad_u, i);
            const double guv = detail::dot_at(grads.grad_u, grads.grad_v, i);
            const double gu_s = detail::dot_at(grads.grad_u, ds, i);
            const double gv_s = detail::dot_at(grads.grad_v, ds, i);
            const double defect = u - reg.drift(u);  // u (1 - F'_eps(u)) >= 0
            a[i] = xi.value(u) * s[i];
            b[i] = -x2 * gu2 * s[i] - x1 * gu_s + u * x2 * guv * s[i] + u * x1 * gv_s;
            c[i] = -defect * (x2 * guv * s[i] + x1 * gv_s);
            d[i] = defect * (std::abs(x2 * guv * s[i]) + std::abs(x1 * gv_s));
        }
        const double ia = detail::integrate_values(g, a);
        if (k == 0) first = ia;
        time_term[k] = ia * psi.theta_dot(f.time);
        rhs_term[k] = detail::integrate_values(g, b) * th;
        cons_term[k] = detail::integrate_values(g, c) * th;
        bound_term[k] = detail::integrate_values(g, d) * std::abs(th);
    }
    RenormalizedResidual r;
    r.lhs = -detail::trapezoid(times, time_term) - first * psi.theta(times.front());
    r.rhs_reference = detail::trapezoid(times, rhs_term);
    r.consistency = detail::trapezoid(times, cons_term);
    r.consistency_bound = detail::trapezoid(times, bound_term);
    return r;
}

/// Weak v-identity  int int v psi_t + int v0 psi(0) = int int grad v.grad psi + int int c(u) v psi
/// with c = F_eps (eps form) and c = id (zero form); values are left minus right.
inline VWeakResidual v_weak_residual(const TrajectoryStore& traj, const TestFunction& psi) {
    const auto times = traj.times();
    psi.validate(times, true);
    const TensorGrid& g = traj.grid();
    const Regularization reg(traj.epsilon());
    const auto s = psi.spatial(g);
    const auto ds = psi.spatial_gradient(g);
    const std::size_t n = g.size();

    std::vector<double> vt(times.size()), diff(times.size()), cons_eps(times.size()), cons_zero(times.size()),
        gap(times.size());
    std::vector<double> a(n), b(n), c(n), e(n), h(n);
    double first = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Frame& f = traj.frames()[k];
        const auto grad_v = gradient_centered(f.v);
        const double th = psi.theta(f.time);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = f.u[i];
            const double v = f.v[i];
            const double fu = reg.f(u);
            a[i] = v * s[i];
            b[i] = detail::dot_at(grad_v, ds, i);
            c[i] = fu * v * s[i];
            e[i] = u * v * s[i];
            h[i] = (u - fu) * v * std::abs(s[i]);
        }
        const double ia = detail::integrate_values(g, a);
        if (k == 0) first = ia;
        vt[k] = ia * psi.theta_dot(f.time);
        diff[k] = detail::integrate_values(g, b) * th;
        cons_eps[k] = detail::integrate_values(g, c) * th;
        cons_zero[k] = detail::integrate_values(g, e) * th;
        gap[k] = detail::integrate_values(g, h) * std::abs(th);
    }
    const double left = detail::trapezoid(times, vt) + first * psi.theta(times.front());
    const double grad_part = detail::trapezoid(times, diff);
    VWeakResidual r;
    r.eps_form = left - grad_part - detail::trapezoid(times, cons_eps);
    r.zero_form = left - grad_part - detail::trapezoid(times, cons_zero);
    r.gap_bound = detail::trapezoid(times, gap);
    return r;
}

struct DefectMeasureReport {
    std::vector<double> levels;
    std::vector<double> mu_mass;  // int int |phi_E''|grad u|^2 - u F' phi_E'' grad u.grad v| per level
    std::vector<double> nu;       // nu[K-1]    = int int chi_{u in [K-1,K)} |grad sqrt u|^2
    std::vector<double> gamma;    // gamma[K-1] = int int chi_{u in [K-1,K)} F(u) |grad v|^2
    double nu_total = 0.0;        // int int |grad sqrt u|^2, computed without binning
    double gamma_total = 0.0;     // int int F(u)|grad v|^2, computed without binning
    double max_u = 0.0;
    double median_u = 0.0;        // over all cells of all snapshots

    double nu_sum() const { return detail::compensated_sum(nu); }
    double gamma_sum() const { return detail::compensated_sum(gamma); }
};

/// |grad sqrt u|^2 is taken as |grad u|^2 / (4u) from the centered gradient of u, the same
/// integrand as the Fisher information in the diagnostics.
inline DefectMeasureReport defect_measures(const TrajectoryStore& traj, const TruncationFamily& fam) {
    if (traj.size() < 2) throw InvalidArgument("defect_measures: trajectory needs at least two snapshots");
    const TensorGrid& g = traj.grid();
    const Regularization reg(traj.epsilon());
    const auto times = traj.times();
    const std::size_t n = g.size();
    DefectMeasureReport rep;
    rep.levels = fam.levels();
    rep.max_u = traj.max_u();
    const auto bins = static_cast<std::size_t>(std::floor(rep.max_u)) + 1;

    std::vector<std::vector<double>> mu_t(rep.levels.size(), std::vector<double>(times.size()));
    std::vector<std::vector<double>> nu_t(bins, std::vector<double>(times.size()));
    std::vector<std::vector<double>> gamma_t(bins, std::vector<double>(times.size()));
    std::vector<double> nu_all(times.size()), gamma_all(times.size());
    std::vector<double> all_u;
    all_u.reserve(n * times.size());

    std::vector<double> w(n), nu_cell(n), gamma_cell(n);
    std::vector<std::vector<double>> binned_nu(bins, std::vector<double>(n)), binned_gamma(bins, std::vector<double>(n));
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Frame& f = traj.frames()[k];
        const auto grads = detail::frame_gradients(f);
        std::vector<double> gu2(n), guv(n), gv2(n);
        for (std::size_t i = 0; i < n; ++i) {
            gu2[i] = detail::dot_at(grads.grad_u, grads.grad_u, i);
            guv[i] = detail::dot_at(grads.grad_u, grads.grad_v, i);
            gv2[i] = detail::dot_at(grads.grad_v, grads.grad_v, i);
            all_u.push_back(f.u[i]);
        }
        for (std::size_t l = 0; l < rep.levels.size(); ++l) {
            const double e = rep.levels[l];
            for (std::size_t i = 0; i < n; ++i) {
                const double u = f.u[i];
                const double p2 = fam.second_unchecked(e, u);
                w[i] = std::abs(p2 * gu2[i] - reg.drift(u) * p2 * guv[i]);
            }
            mu_t[l][k] = detail::integrate_values(g, w);
        }
        for (auto& b : binned_nu) std::fill(b.begin(), b.end(), 0.0);
        for (auto& b : binned_gamma) std::fill(b.begin(), b.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = f.u[i];
            nu_cell[i] = gu2[i] / (4.0 * u);
            gamma_cell[i] = reg.f(u) * gv2[i];
            const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(u)));
            binned_nu[bin][i] = nu_cell[i];
            binned_gamma[bin][i] = gamma_cell[i];
        }
        for (std::size_t b = 0; b < bins; ++b) {
            nu_t[b][k] = detail::integrate_values(g, binned_nu[b]);
            gamma_t[b][k] = detail::integrate_values(g, binned_gamma[b]);
        }
        nu_all[k] = detail::integrate_values(g, nu_cell);
        gamma_all[k] = detail::integrate_values(g, gamma_cell);
    }
    for (std::size_t l = 0; l < rep.levels.size(); ++l) rep.mu_mass.push_back(detail::trapezoid(times, mu_t[l]));
    for (std::size_t b = 0; b < bins; ++b) {
        rep.nu.push_back(detail::trapezoid(times, nu_t[b]));
        rep.gamma.push_back(detail::trapezoid(times, gamma_t[b]));
    }
    rep.nu_total = detail::trapezoid(times, nu_all);
    rep.gamma_total = detail::trapezoid(times, gamma_all);
    const auto mid = all_u.begin() + static_cast<std::ptrdiff_t>(all_u.size() / 2);
    std::nth_element(all_u.begin(), mid, all_u.end());
    rep.median_u = *mid;
    return rep;
}

/// |mu^E| is non-increasing along the ladder for levels above the median of u, and exactly
/// 0 for levels above max u.
struct DefectDecay {
    bool zero_above_max = true;
    bool monotone_above_median = true;
    bool passed() const { return zero_above_max && monotone_above_median; }
};

inline DefectDecay assess_defect_decay(const DefectMeasureReport& rep) {
    DefectDecay d;
    double prev = -1.0;
    for (std::size_t l = 0; l < rep.levels.size(); ++l) {
        const double e = rep.levels[l];
        if (e > rep.max_u && rep.mu_mass[l] != 0.0) d.zero_above_max = false;
        if (e > rep.median_u) {
            if (prev >= 0.0 && rep.mu_mass[l] > prev) d.monotone_above_median = false;
            prev = rep.mu_mass[l];
        }
    }
    return d;
}

namespace detail {

/// Level as it appears in column names: integers without a decimal point.
inline std::string level_label(double e) {
    if (e == std::floor(e) && std::abs(e) < 1e15) return std::to_string(static_cast<long long>(e));
    std::string s = std::to_string(e);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

}  // namespace detail

struct ResidualMatrix {
    std::vector<std::string> columns;        // test_id, truncated_E..., renormalized_E..., v_weak_eps, v_weak_zero
    std::vector<std::vector<double>> rows;   // one per test function
};

/// Absolute residuals of every identity for every test function; rows are evaluated
/// concurrently when `parallel` is set.
inline ResidualMatrix residual_matrix(const TrajectoryStore& traj, const TruncationFamily& fam,
                                      const std::vector<double>& levels, const std::vector<TestFunction>& tests,
                                      bool parallel = true) {
    ResidualMatrix m;
    m.columns.push_back("test_id");
    for (double e : levels) m.columns.push_back("truncated_" + detail::level_label(e));
    for (double e : levels) m.columns.push_back("renormalized_" + detail::level_label(e));
    m.columns.push_back("v_weak_eps");
    m.columns.push_back("v_weak_zero");
    auto row = [&](std::size_t i) {
        std::vector<double> r{static_cast<double>(i)};
        for (double e : levels) r.push_back(truncated_identity_residual(traj, fam, e, tests[i]).residual());
        for (double e : levels) r.push_back(renormalized_residual(traj, Renormalizer(fam, e), tests[i]).residual());
        const auto vw = v_weak_residual(traj, tests[i]);
        r.push_back(vw.eps_residual());
        r.push_back(vw.zero_residual());
        return r;
    };
    if (!parallel) {
        for (std::size_t i = 0; i < tests.size(); ++i) m.rows.push_back(row(i));
        return m;
    }
    std::vector<std::future<std::vector<double>>> jobs;
    for (std::size_t i = 0; i < tests.size(); ++i) jobs.push_back(std::async(std::launch::async, row, i));
    for (auto& j : jobs) m.rows.push_back(j.get());
    return m;
}

}  // namespace rclab
