#pragma once

// Explicit time stepping (fixed RK4 and adaptive Dormand-Prince RK45) with
// event detection by sign-change bracketing plus bisection. The engine is
// dimension-generic; the model-facing integrate() wraps it for State5.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "vecmat.hpp"

namespace sinchaos {

enum class Method { AdaptiveRk45, FixedRk4 };

struct IntegratorConfig {
    Method method = Method::AdaptiveRk45;
    double abs_tol = 1e-6;
    double rel_tol = 1e-6;
    double dt = 0.1;              // fixed step, or initial step for the adaptive method
    double t_max = 1e4;           // horizon (ms)
    double event_refine_tol = 1e-6;  // time tolerance for event localization (ms)
    double h_max = 5.0;           // adaptive step ceiling; keeps event sampling dense
};

enum class EventKind { VMaxAbove, VMaxBelow, DVMax, SectionCross, Custom };

struct Event {
    EventKind kind;
    double t;
    State5 state;
};

struct StepFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

constexpr double kMinStep = 1e-10;
constexpr double kDivergenceGuard = 1e6;

template <std::size_t N, class Rhs>
inline Vec<N> rk4_step(Rhs&& f, double t, const Vec<N>& y, double h)
{
    Vec<N> k1, k2, k3, k4;
    f(t, y, k1);
    f(t + 0.5 * h, add_scaled(y, 0.5 * h, k1), k2);
    f(t + 0.5 * h, add_scaled(y, 0.5 * h, k2), k3);
    f(t + h, add_scaled(y, h, k3), k4);
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Dormand-Prince 5(4) pair.
template <std::size_t N, class Rhs>
inline void dopri_step(Rhs&& f, double t, const Vec<N>& y, double h, Vec<N>& y5, Vec<N>& err)
{
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    Vec<N> k1, k2, k3, k4, k5, k6, k7, tmp;
    f(t, y, k1);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * a21 * k1[i];
    f(t + h / 5.0, tmp, k2);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + 3.0 * h / 10.0, tmp, k3);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + 4.0 * h / 5.0, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + 8.0 * h / 9.0, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
        y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, y5, k7);
    for (std::size_t i = 0; i < N; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
}

} // namespace detail

template <std::size_t N>
struct EventN {
    EventKind kind;
    double t;
    Vec<N> y;
};

template <std::size_t N>
struct DetectorN {
    std::function<double(double, const Vec<N>&)> g;
    int direction;  // +1 fire on low-to-high crossings of g, -1 on high-to-low
    std::function<EventKind(double, const Vec<N>&)> classify;
};

template <std::size_t N>
struct OdeResult {
    double t_final = 0.0;
    Vec<N> y_final{};
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    bool stopped_by_rule = false;
    double last_h = 0.0;
    std::vector<EventN<N>> events;
};

// Core loop. Events are localized inside the accepted step by bisection on a
// single RK4 substep from the step's start state, to event_refine_tol in time.
template <std::size_t N, class Rhs>
OdeResult<N> integrate_ode(Rhs&& f, const Vec<N>& y0, const IntegratorConfig& cfg,
                           const std::vector<DetectorN<N>>& detectors = {},
                           const std::function<bool(const EventN<N>&)>& stop_rule = nullptr,
                           const std::function<void(double, const Vec<N>&)>& sink = nullptr,
                           double initial_h = 0.0)
{
    if (!all_finite(y0))
        throw std::domain_error("integrate: non-finite initial state");

    OdeResult<N> res;
    double t = 0.0;
    Vec<N> y = y0;
    double h = initial_h > 0.0 ? initial_h : cfg.dt;

    std::vector<double> gvals(detectors.size());
    for (std::size_t d = 0; d < detectors.size(); ++d)
        gvals[d] = detectors[d].g(t, y);
    if (sink)
        sink(t, y);

    struct Hit {
        double tau;
        std::size_t det;
    };
    std::vector<Hit> hits;

    // stop once the remaining span is below resolution, else the final
    // truncated step can underflow and stall the loop
    const double t_tail = 1e-12 * std::max(1.0, cfg.t_max);

    while (t < cfg.t_max - t_tail) {
        h = std::min(h, cfg.t_max - t);
        Vec<N> y_new;
        double h_used = h;

        if (cfg.method == Method::FixedRk4) {
            y_new = detail::rk4_step(f, t, y, h);
            ++res.steps_accepted;
        } else {
            for (;;) {
                Vec<N> err;
                detail::dopri_step(f, t, y, h, y_new, err);
                double nrm = 0.0;
                for (std::size_t i = 0; i < N; ++i) {
                    const double sc = cfg.abs_tol
                                    + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                    const double e = err[i] / sc;
                    nrm += e * e;
                }
                nrm = std::sqrt(nrm / N);
                if (nrm <= 1.0 || h <= detail::kMinStep) {
                    if (h <= detail::kMinStep && nrm > 1.0)
                        throw StepFailureError("integrate: adaptive step underflow below 1e-10 ms");
                    h_used = h;
                    const double fac = nrm > 0.0
                        ? std::clamp(0.9 * std::pow(nrm, -0.2), 0.2, 5.0) : 5.0;
                    h = std::min(h * fac, cfg.h_max);
                    ++res.steps_accepted;
                    break;
                }
                ++res.steps_rejected;
                h = std::max(h * std::clamp(0.9 * std::pow(nrm, -0.2), 0.2, 1.0),
                             detail::kMinStep);
            }
        }

        if (max_abs(y_new) > detail::kDivergenceGuard)
            throw DivergenceError("integrate: state exceeded the divergence guard");

        const double t_new = t + h_used;

        if (!detectors.empty()) {
            hits.clear();
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                const double ga = gvals[d];
                const double gb = detectors[d].g(t_new, y_new);
                const int dir = detectors[d].direction;
                const bool crossed = (dir > 0) ? (ga < 0.0 && gb >= 0.0)
                                               : (ga > 0.0 && gb <= 0.0);
                if (crossed) {
                    // bisect on a consistent single-substep evaluation
                    double lo = 0.0, hi = h_used;
                    double glo = ga;
                    auto eval = [&](double tau) {
                        const Vec<N> ytau = detail::rk4_step(f, t, y, tau);
                        return detectors[d].g(t + tau, ytau);
                    };
                    double ghi = eval(hi);
                    if ((dir > 0 && !(glo < 0.0 && ghi >= 0.0))
                        || (dir < 0 && !(glo > 0.0 && ghi <= 0.0))) {
                        gvals[d] = gb;
                        continue;
                    }
                    while (hi - lo > cfg.event_refine_tol) {
                        const double mid = 0.5 * (lo + hi);
                        const double gm = eval(mid);
                        if ((glo < 0.0) == (gm < 0.0)) {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                    hits.push_back({0.5 * (lo + hi), d});
                }
                gvals[d] = gb;
            }
            std::sort(hits.begin(), hits.end(),
                      [](const Hit& a, const Hit& b) { return a.tau < b.tau; });
            for (const Hit& hit : hits) {
                const Vec<N> ye = detail::rk4_step(f, t, y, hit.tau);
                EventN<N> ev{detectors[hit.det].classify
                                 ? detectors[hit.det].classify(t + hit.tau, ye)
                                 : EventKind::Custom,
                             t + hit.tau, ye};
                res.events.push_back(ev);
                if (stop_rule && stop_rule(ev)) {
                    res.t_final = ev.t;
                    res.y_final = ev.y;
                    res.stopped_by_rule = true;
                    res.last_h = h_used;
                    if (sink)
                        sink(ev.t, ev.y);
                    return res;
                }
            }
        }

        t = t_new;
        y = y_new;
        if (sink)
            sink(t, y);
    }

    res.t_final = t;
    res.y_final = y;
    res.last_h = h;
    return res;
}

// ---- model-facing layer ----

using Detector5 = DetectorN<5>;

struct TrajectorySummary {
    double t_final = 0.0;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    bool stopped_by_rule = false;
};

struct IntegrateOutput {
    TrajectorySummary summary;
    std::vector<Event> events;
    State5 final_state;
};

inline auto model_rhs_fn(const ModelParams& p)
{
    return [p](double, const Vec5& y, Vec5& dy) {
        const State5 d = rhs(State5::from_vec(y), p);
        dy = d.to_vec();
    };
}

// Fires at local maxima of V(t); classification against the threshold voltage
// splits spikes (VMaxAbove) from subthreshold maxima (VMaxBelow).
inline Detector5 detector_vmax(const ModelParams& p, double threshold)
{
    Detector5 d;
    d.g = [p](double, const Vec5& y) { return rhs(State5::from_vec(y), p).V; };
    d.direction = -1;
    d.classify = [threshold](double, const Vec5& y) {
        return y[0] > threshold ? EventKind::VMaxAbove : EventKind::VMaxBelow;
    };
    return d;
}

// Fires at local maxima of V'(t); V'' is the V-row of J applied to the flow.
inline Detector5 detector_dvmax(const ModelParams& p)
{
    Detector5 d;
    d.g = [p](double, const Vec5& y) {
        const State5 s = State5::from_vec(y);
        const State5 f = rhs(s, p);
        const Mat5 J = jacobian(s, p);
        const Vec5 fv = f.to_vec();
        double vpp = 0.0;
        for (int i = 0; i < 5; ++i)
            vpp += J[0][i] * fv[i];
        return vpp;
    };
    d.direction = -1;
    d.classify = [](double, const Vec5&) { return EventKind::DVMax; };
    return d;
}

// Low-to-high zero crossings of the angle test function against the ray from
// the origin through (sf_Ca, sf_x) in the slow plane.
inline Detector5 detector_section(double sf_Ca, double sf_x)
{
    if (sf_Ca == 0.0 && sf_x == 0.0)
        throw std::invalid_argument("detector_section: (sf_Ca, sf_x) must not be the origin");
    const double ref = std::atan2(sf_x, sf_Ca);
    Detector5 d;
    d.g = [ref](double, const Vec5& y) {
        double a = std::atan2(y[3], y[4]) - ref;
        while (a > std::numbers::pi)
            a -= 2.0 * std::numbers::pi;
        while (a <= -std::numbers::pi)
            a += 2.0 * std::numbers::pi;
        return a;
    };
    d.direction = +1;
    d.classify = [](double, const Vec5&) { return EventKind::SectionCross; };
    return d;
}

inline Detector5 detector_custom(std::function<double(double, const State5&)> g, int direction)
{
    Detector5 d;
    d.g = [g = std::move(g)](double t, const Vec5& y) { return g(t, State5::from_vec(y)); };
    d.direction = direction;
    d.classify = [](double, const Vec5&) { return EventKind::Custom; };
    return d;
}

inline IntegrateOutput integrate(const State5& s0, const ModelParams& p,
                                 const IntegratorConfig& cfg,
                                 const std::vector<Detector5>& detectors = {},
                                 const std::function<bool(const Event&)>& stop_rule = nullptr,
                                 const std::function<void(double, const State5&)>& sink = nullptr)
{
    std::function<bool(const EventN<5>&)> stop;
    if (stop_rule)
        stop = [&stop_rule](const EventN<5>& e) {
            return stop_rule(Event{e.kind, e.t, State5::from_vec(e.y)});
        };
    std::function<void(double, const Vec5&)> vsink;
    if (sink)
        vsink = [&sink](double t, const Vec5& y) { sink(t, State5::from_vec(y)); };

    const OdeResult<5> r = integrate_ode<5>(model_rhs_fn(p), s0.to_vec(), cfg, detectors, stop, vsink);

    IntegrateOutput out;
    out.summary = {r.t_final, r.steps_accepted, r.steps_rejected, r.stopped_by_rule};
    out.events.reserve(r.events.size());
    for (const auto& e : r.events)
        out.events.push_back({e.kind, e.t, State5::from_vec(e.y)});
    out.final_state = State5::from_vec(r.y_final);
    return out;
}

} // namespace sinchaos
