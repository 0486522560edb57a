#pragma once

// The SiN (swim inter-neuron) conductance-based model: a 5-ODE slow-fast
// system with fast spike-generating variables (V, h, n) and a slow pair
// (x, [Ca]) that drives bursting. The two bifurcation parameters dCa and
// dVx shift the calcium reversal potential and the half-activation voltage
// of the slow TTX-resistant current.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vecmat.hpp"

namespace sinchaos {

struct ModelParams {
    double C_m   = 1.0;     // membrane capacitance
    double g_I   = 4.0;     // fast inward Na+/Ca2+ conductance (nS)
    double E_I   = 30.0;    // its reversal potential (mV)
    double g_K   = 0.3;     // fast K+ conductance
    double E_K   = -75.0;
    double g_L   = 0.003;   // leak
    double E_L   = -40.0;
    double g_T   = 0.01;    // slow TTX-resistant inward conductance
    double g_KCa = 0.03;    // Ca-activated K+ conductance
    double E_Ca  = 140.0;   // calcium Nernst potential (mV)
    double rho   = 0.0003;  // Ca relaxation rate (1/ms)
    double K_c   = 0.0085;  // Ca gain (1/mV)
    double tau_x = 100.0;   // slow gate time constant (ms); 235 is the alternative setting
    double dCa   = 0.0;     // bifurcation parameter Delta[Ca] (mV)
    double dVx   = 0.0;     // bifurcation parameter DeltaV_x (mV)

    void validate() const
    {
        if (!(C_m > 0.0) || !(tau_x > 0.0) || !(rho > 0.0) || !(K_c > 0.0))
            throw std::invalid_argument("ModelParams: C_m, tau_x, rho, K_c must be positive");
        if (g_I < 0.0 || g_K < 0.0 || g_L < 0.0 || g_T < 0.0 || g_KCa < 0.0)
            throw std::invalid_argument("ModelParams: conductances must be nonnegative");
    }
};

struct State5 {
    double V  = 0.0;  // membrane voltage (mV)
    double h  = 0.0;  // inactivation gate of the fast inward current
    double n  = 0.0;  // activation gate of the fast K+ current
    double x  = 0.0;  // slow TTX-resistant gate
    double Ca = 0.0;  // intracellular calcium concentration

    Vec5 to_vec() const { return {V, h, n, x, Ca}; }
    static State5 from_vec(const Vec5& v) { return {v[0], v[1], v[2], v[3], v[4]}; }
};

// Fast subsystem point; the slow pair (x, Ca) is carried as frozen context.
struct FastState {
    double V = 0.0;
    double h = 0.0;
    double n = 0.0;
};

struct GatingValues {
    double alpha_m, beta_m, m_inf;
    double alpha_h, beta_h, h_inf, tau_h;
    double alpha_n, beta_n, n_inf, tau_n;
    double x_inf;
};

struct CurrentValues {
    double I_I, I_K, I_T, I_KCa, I_leak;
};

namespace detail {

// u / (exp(u/10) - 1) with the removable singularity at u = 0 evaluated by a
// second-order series once |u| < 1e-6.
inline double expratio10(double u)
{
    if (std::abs(u) < 1e-6) {
        const double w = u / 10.0;
        return 10.0 * (1.0 - 0.5 * w + w * w / 12.0);
    }
    return u / std::expm1(u / 10.0);
}

inline double expratio10_du(double u)
{
    if (std::abs(u) < 1e-6) {
        const double w = u / 10.0;
        return -0.5 + w / 6.0;
    }
    const double g = std::expm1(u / 10.0);
    return (g - u * std::exp(u / 10.0) / 10.0) / (g * g);
}

constexpr double kVsSlope = 127.0 / 105.0;

inline double v_shift(double V) { return (127.0 * V + 8265.0) / 105.0; }

// Gating values plus their V-derivatives, shared by the vector field and the
// analytic Jacobian so both see identical arithmetic.
struct GatingDerivs {
    GatingValues g;
    double dm_inf, dh_inf, dtau_h, dn_inf, dtau_n, dx_inf;
};

inline GatingDerivs gating_full(double V, const ModelParams& p)
{
    GatingDerivs r;
    const double Vs = v_shift(V);

    const double um = 50.0 - Vs;
    const double am = 0.1 * expratio10(um);
    const double dam = 0.1 * expratio10_du(um) * (-kVsSlope);
    const double bm = 4.0 * std::exp((25.0 - Vs) / 18.0);
    const double dbm = bm * (-1.0 / 18.0) * kVsSlope;

    const double ah = 0.07 * std::exp((25.0 - Vs) / 20.0);
    const double dah = ah * (-1.0 / 20.0) * kVsSlope;
    const double eh = std::exp((55.0 - Vs) / 10.0);
    const double bh = 1.0 / (1.0 + eh);
    const double dbh = bh * bh * eh * (1.0 / 10.0) * kVsSlope;

    const double un = 55.0 - Vs;
    const double an = 0.01 * expratio10(un);
    const double dan = 0.01 * expratio10_du(un) * (-kVsSlope);
    const double bn = 0.125 * std::exp((45.0 - Vs) / 80.0);
    const double dbn = bn * (-1.0 / 80.0) * kVsSlope;

    const double zx = -0.15 * (V + 50.0 - p.dVx);
    const double xinf = 1.0 / (1.0 + std::exp(zx));

    r.g.alpha_m = am;
    r.g.beta_m = bm;
    r.g.m_inf = am / (am + bm);
    r.g.alpha_h = ah;
    r.g.beta_h = bh;
    r.g.h_inf = ah / (ah + bh);
    r.g.tau_h = 12.5 / (ah + bh);
    r.g.alpha_n = an;
    r.g.beta_n = bn;
    r.g.n_inf = an / (an + bn);
    r.g.tau_n = 12.5 / (an + bn);
    r.g.x_inf = xinf;

    const double sm = am + bm;
    r.dm_inf = (dam * bm - am * dbm) / (sm * sm);
    const double sh = ah + bh;
    r.dh_inf = (dah * bh - ah * dbh) / (sh * sh);
    r.dtau_h = -12.5 * (dah + dbh) / (sh * sh);
    const double sn = an + bn;
    r.dn_inf = (dan * bn - an * dbn) / (sn * sn);
    r.dtau_n = -12.5 * (dan + dbn) / (sn * sn);
    r.dx_inf = 0.15 * xinf * (1.0 - xinf);
    return r;
}

} // namespace detail

inline GatingValues gating(double V, const ModelParams& p)
{
    if (!std::isfinite(V))
        throw std::domain_error("gating: non-finite voltage");
    return detail::gating_full(V, p).g;
}

inline CurrentValues currents(const State5& s, const ModelParams& p)
{
    const GatingValues g = gating(s.V, p);
    CurrentValues c;
    const double m3 = g.m_inf * g.m_inf * g.m_inf;
    const double n4 = s.n * s.n * s.n * s.n;
    c.I_I = p.g_I * s.h * m3 * (s.V - p.E_I);
    c.I_K = p.g_K * n4 * (s.V - p.E_K);
    c.I_T = p.g_T * s.x * (s.V - p.E_I);
    c.I_KCa = p.g_KCa * s.Ca / (0.5 + s.Ca) * (s.V - p.E_K);
    c.I_leak = p.g_L * (s.V - p.E_L);
    return c;
}

inline State5 rhs(const State5& s, const ModelParams& p)
{
    const Vec5 v = s.to_vec();
    if (!all_finite(v))
        throw std::domain_error("rhs: non-finite state component");

    const GatingValues g = detail::gating_full(s.V, p).g;
    const double m3 = g.m_inf * g.m_inf * g.m_inf;
    const double n4 = s.n * s.n * s.n * s.n;
    const double I_I = p.g_I * s.h * m3 * (s.V - p.E_I);
    const double I_K = p.g_K * n4 * (s.V - p.E_K);
    const double I_T = p.g_T * s.x * (s.V - p.E_I);
    const double I_KCa = p.g_KCa * s.Ca / (0.5 + s.Ca) * (s.V - p.E_K);
    const double I_leak = p.g_L * (s.V - p.E_L);

    State5 d;
    d.V = (-I_I - I_K - I_T - I_KCa - I_leak) / p.C_m;
    d.h = (g.h_inf - s.h) / g.tau_h;
    d.n = (g.n_inf - s.n) / g.tau_n;
    d.x = (g.x_inf - s.x) / p.tau_x;
    d.Ca = p.rho * (p.K_c * s.x * (p.E_Ca - s.V + p.dCa) - s.Ca);
    return d;
}

// Analytic Jacobian of rhs, cross-checked against finite differences in the
// test suite. Row order matches (V, h, n, x, Ca).
inline Mat5 jacobian(const State5& s, const ModelParams& p)
{
    if (!all_finite(s.to_vec()))
        throw std::domain_error("jacobian: non-finite state component");

    const detail::GatingDerivs gd = detail::gating_full(s.V, p);
    const GatingValues& g = gd.g;
    const double m = g.m_inf;
    const double m2 = m * m;
    const double m3 = m2 * m;
    const double n3 = s.n * s.n * s.n;
    const double n4 = n3 * s.n;
    const double sat = s.Ca / (0.5 + s.Ca);

    Mat5 J{};
    // V' row
    J[0][0] = -(p.g_I * s.h * (3.0 * m2 * gd.dm_inf * (s.V - p.E_I) + m3)
                + p.g_K * n4 + p.g_T * s.x + p.g_KCa * sat + p.g_L) / p.C_m;
    J[0][1] = -p.g_I * m3 * (s.V - p.E_I) / p.C_m;
    J[0][2] = -4.0 * p.g_K * n3 * (s.V - p.E_K) / p.C_m;
    J[0][3] = -p.g_T * (s.V - p.E_I) / p.C_m;
    J[0][4] = -p.g_KCa * (s.V - p.E_K) * 0.5 / ((0.5 + s.Ca) * (0.5 + s.Ca)) / p.C_m;
    // h' row
    J[1][0] = gd.dh_inf / g.tau_h - (g.h_inf - s.h) * gd.dtau_h / (g.tau_h * g.tau_h);
    J[1][1] = -1.0 / g.tau_h;
    // n' row
    J[2][0] = gd.dn_inf / g.tau_n - (g.n_inf - s.n) * gd.dtau_n / (g.tau_n * g.tau_n);
    J[2][2] = -1.0 / g.tau_n;
    // x' row: exactly two nonzero entries
    J[3][0] = gd.dx_inf / p.tau_x;
    J[3][3] = -1.0 / p.tau_x;
    // Ca' row
    J[4][0] = -p.rho * p.K_c * s.x;
    J[4][3] = p.rho * p.K_c * (p.E_Ca - s.V + p.dCa);
    J[4][4] = -p.rho;
    return J;
}

inline FastState fast_rhs(const FastState& f, double x, double Ca, const ModelParams& p)
{
    State5 s{f.V, f.h, f.n, x, Ca};
    const State5 d = rhs(s, p);
    return {d.V, d.h, d.n};
}

struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Voltage balance of the fast subsystem with gates at rest: V' evaluated at
// h = h_inf(V), n = n_inf(V) for frozen (x, Ca).
inline double fast_balance(double V, double x, double Ca, const ModelParams& p,
                           double* dFdV = nullptr)
{
    const GatingDerivs gd = gating_full(V, p);
    const State5 s{V, gd.g.h_inf, gd.g.n_inf, x, Ca};
    const State5 d = rhs(s, p);
    if (dFdV) {
        const Mat5 J = jacobian(s, p);
        *dFdV = J[0][0] + J[0][1] * gd.dh_inf + J[0][2] * gd.dn_inf;
    }
    return d.V;
}

} // namespace detail

struct FastEquilibriumOptions {
    double scan_lo = -90.0;
    double scan_hi = 40.0;
    int scan_intervals = 400;
};

// Roots of the fast-subsystem voltage balance, most hyperpolarized first.
inline std::vector<double> fast_equilibrium_roots(double x, double Ca, const ModelParams& p,
                                                  const FastEquilibriumOptions& opt = {})
{
    std::vector<double> roots;
    const double dv = (opt.scan_hi - opt.scan_lo) / opt.scan_intervals;
    double Va = opt.scan_lo;
    double Fa = detail::fast_balance(Va, x, Ca, p);
    for (int i = 1; i <= opt.scan_intervals; ++i) {
        const double Vb = opt.scan_lo + i * dv;
        const double Fb = detail::fast_balance(Vb, x, Ca, p);
        if ((Fa < 0.0 && Fb >= 0.0) || (Fa > 0.0 && Fb <= 0.0)) {
            double lo = Va, hi = Vb, flo = Fa;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = detail::fast_balance(mid, x, Ca, p);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            double V = 0.5 * (lo + hi);
            for (int it = 0; it < 30; ++it) {
                double dF;
                const double F = detail::fast_balance(V, x, Ca, p, &dF);
                if (std::abs(F) < 1e-13 || dF == 0.0)
                    break;
                const double step = F / dF;
                V -= step;
                if (std::abs(step) < 1e-14)
                    break;
            }
            roots.push_back(V);
        }
        Va = Vb;
        Fa = Fb;
    }
    return roots;
}

// Fast-subsystem equilibrium for frozen (x, Ca). With several roots the one
// nearest V_hint wins; without a hint the most hyperpolarized root is taken.
inline FastState fast_equilibrium(double x, double Ca, const ModelParams& p,
                                  const double* V_hint = nullptr,
                                  const FastEquilibriumOptions& opt = {})
{
    const std::vector<double> roots = fast_equilibrium_roots(x, Ca, p, opt);
    if (roots.empty())
        throw NoRootError("fast_equilibrium: no sign change on the bracketing scan");
    double V = roots.front();
    if (V_hint) {
        double best = std::abs(roots.front() - *V_hint);
        for (double r : roots) {
            const double d = std::abs(r - *V_hint);
            if (d < best) {
                best = d;
                V = r;
            }
        }
    }
    const GatingValues g = gating(V, p);
    return {V, g.h_inf, g.n_inf};
}

enum class NullclineKind { X, Ca };

struct NullclinePoint {
    double V;
    double Ca;
    double x;
    bool flagged;  // nonphysical intermediate value (negative required Ca, gate out of range)
};

struct NullclineCurve {
    NullclineKind kind;
    std::vector<NullclinePoint> points;
};

inline std::vector<double> default_nullcline_grid(int n = 2000, double lo = -70.0, double hi = 20.0)
{
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

// Slow nullclines in the ([Ca], x) plane, parameterized by voltage.
//
// x-nullcline: put the gates at rest (x = x_inf), then solve the voltage
// balance V' = 0 for the I_KCa saturation and invert it for [Ca].
// Ca-nullcline: substitute [Ca] = K_c x (E_Ca - V + dCa) into the voltage
// balance and solve the resulting scalar equation for x at each grid voltage;
// several roots give several curve points.
inline std::pair<NullclineCurve, NullclineCurve> nullclines(const ModelParams& p,
                                                            const std::vector<double>& V_grid)
{
    NullclineCurve xc{NullclineKind::X, {}};
    NullclineCurve cc{NullclineKind::Ca, {}};

    for (double V : V_grid) {
        const GatingValues g = gating(V, p);
        const double m3 = g.m_inf * g.m_inf * g.m_inf;
        const double n4 = g.n_inf * g.n_inf * g.n_inf * g.n_inf;
        const double I_I = p.g_I * g.h_inf * m3 * (V - p.E_I);
        const double I_K = p.g_K * n4 * (V - p.E_K);
        const double I_leak = p.g_L * (V - p.E_L);

        // x-nullcline
        {
            const double I_T = p.g_T * g.x_inf * (V - p.E_I);
            const double I_KCa_req = -I_I - I_K - I_T - I_leak;
            const double denom = p.g_KCa * (V - p.E_K);
            const double R = I_KCa_req / denom;
            const double Ca = 0.5 * R / (1.0 - R);
            const bool bad = !(R >= 0.0 && R < 1.0) || !std::isfinite(Ca);
            xc.points.push_back({V, Ca, g.x_inf, bad});
        }

        // Ca-nullcline
        {
            const double c = p.K_c * (p.E_Ca - V + p.dCa);
            auto balance = [&](double x) {
                const double I_T = p.g_T * x * (V - p.E_I);
                const double Ca = c * x;
                const double I_KCa = p.g_KCa * Ca / (0.5 + Ca) * (V - p.E_K);
                return I_I + I_K + I_T + I_KCa + I_leak;
            };
            const int nscan = 600;
            const double xlo = 0.0, xhi = 1.5;
            double xa = xlo, fa = balance(xa);
            for (int i = 1; i <= nscan; ++i) {
                const double xb = xlo + (xhi - xlo) * i / nscan;
                const double fb = balance(xb);
                if ((fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0)) {
                    double lo = xa, hi = xb, flo = fa;
                    for (int it = 0; it < 80; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const double fm = balance(mid);
                        if ((flo < 0.0) == (fm < 0.0)) {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    const double x = 0.5 * (lo + hi);
                    const double Ca = c * x;
                    const bool bad = !(x >= 0.0 && x <= 1.0) || Ca < 0.0;
                    cc.points.push_back({V, Ca, x, bad});
                }
                xa = xb;
                fa = fb;
            }
        }
    }
    return {xc, cc};
}

} // namespace sinchaos
