#pragma once

// Lyapunov spectrum by co-integrating the flow with five tangent vectors
// under the variational equations, re-orthonormalizing with Gram-Schmidt at a
// fixed cadence, plus the Kaplan-Yorke dimension built from the exponents.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "integrate.hpp"
#include "model.hpp"
#include "vecmat.hpp"

namespace sinchaos {

struct LyapunovResult {
    std::array<double, 5> exponents{};  // sorted descending (1/ms)
    double dim_L = 0.0;
    double t_total = 0.0;
    double t_transient = 0.0;
    double avg_trace = 0.0;  // time average of trace(J) over the averaging window
    bool converged = true;
    std::vector<std::array<double, 5>> convergence_trace;
    State5 final_state;
};

struct KaplanYorkeUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// General Kaplan-Yorke staircase: largest k with nonnegative partial sum,
// dim = k + (sum of the first k exponents) / |exponent k+1|.
inline double kaplan_yorke(const std::array<double, 5>& exp_desc)
{
    for (int i = 1; i < 5; ++i)
        if (exp_desc[i] > exp_desc[i - 1])
            throw std::invalid_argument("kaplan_yorke: exponents must be sorted descending");
    if (exp_desc[0] < 0.0)
        return 0.0;
    double partial = 0.0;
    int k = 0;
    double sum_k = 0.0;
    for (int i = 0; i < 5; ++i) {
        partial += exp_desc[i];
        if (partial >= 0.0) {
            k = i + 1;
            sum_k = partial;
        }
    }
    if (k >= 5)
        throw KaplanYorkeUndefined("kaplan_yorke: all partial sums nonnegative");
    return k + sum_k / std::abs(exp_desc[k]);
}

// The dimension attached to a computed spectrum: the two-plus-ratio form when
// the leading exponent is positive and the first three exponents sum to a
// contraction, the general staircase otherwise.
inline double lyapunov_dimension(const std::array<double, 5>& exp_desc)
{
    if (exp_desc[0] > 0.0 && exp_desc[0] + exp_desc[1] + exp_desc[2] < 0.0)
        return 2.0 + exp_desc[0] / std::abs(exp_desc[2]);
    return kaplan_yorke(exp_desc);
}

// System concept for the spectrum engine: rhs() for the base flow and
// jacobian() for the variational part. The constant-Jacobian form below is
// the linear test hook.
struct SinSystem {
    ModelParams p;
    Vec5 rhs(const Vec5& y) const { return sinchaos::rhs(State5::from_vec(y), p).to_vec(); }
    Mat5 jacobian(const Vec5& y) const { return sinchaos::jacobian(State5::from_vec(y), p); }
};

struct LinearSystem {
    Mat5 J{};
    Vec5 rhs(const Vec5& y) const { return matvec(J, y); }
    Mat5 jacobian(const Vec5&) const { return J; }
};

namespace detail {

// Augmented state layout: base point first, then the five tangent vectors.
template <class Sys>
inline auto augmented_rhs(const Sys& sys)
{
    return [&sys](double, const Vec<30>& y, Vec<30>& dy) {
        Vec5 base;
        for (int i = 0; i < 5; ++i)
            base[i] = y[i];
        const Vec5 f = sys.rhs(base);
        const Mat5 J = sys.jacobian(base);
        for (int i = 0; i < 5; ++i)
            dy[i] = f[i];
        for (int v = 0; v < 5; ++v)
            for (int i = 0; i < 5; ++i) {
                double s = 0.0;
                for (int j = 0; j < 5; ++j)
                    s += J[i][j] * y[5 + 5 * v + j];
                dy[5 + 5 * v + i] = s;
            }
    };
}

} // namespace detail

template <class Sys>
LyapunovResult lyapunov_spectrum_for(const Sys& sys, const State5& s0, double t_transient,
                                     double t_total, double renorm_interval,
                                     IntegratorConfig cfg,
                                     const std::array<Vec5, 5>* initial_frame = nullptr)
{
    if (!(t_total > 0.0) || t_transient < 0.0)
        throw std::invalid_argument("lyapunov_spectrum: need t_total > 0 and t_transient >= 0");
    if (!(renorm_interval > 0.0))
        throw std::invalid_argument("lyapunov_spectrum: renorm_interval must be positive");

    Vec<30> y{};
    {
        const Vec5 b = s0.to_vec();
        for (int i = 0; i < 5; ++i)
            y[i] = b[i];
        for (int v = 0; v < 5; ++v)
            for (int i = 0; i < 5; ++i)
                y[5 + 5 * v + i] = initial_frame ? (*initial_frame)[v][i] : (v == i ? 1.0 : 0.0);
    }

    auto rhs30 = detail::augmented_rhs(sys);
    LyapunovResult res;
    res.t_total = t_total;
    res.t_transient = t_transient;

    std::array<double, 5> acc{};
    double trace_acc = 0.0;
    double t_done = 0.0;
    double h_carry = 0.0;
    const double t_end = t_transient + t_total;
    const int n_checkpoints = 16;
    const double checkpoint_dt = t_total / n_checkpoints;
    double next_checkpoint = t_transient + checkpoint_dt;

    cfg.t_max = renorm_interval;

    while (t_done < t_end - 1e-9) {
        const double chunk = std::min(renorm_interval, t_end - t_done);
        cfg.t_max = chunk;
        OdeResult<30> r = integrate_ode<30>(rhs30, y, cfg, {}, nullptr, nullptr, h_carry);
        y = r.y_final;
        h_carry = r.last_h;

        const bool averaging = t_done >= t_transient;
        std::array<Vec5, 5> frame;
        for (int v = 0; v < 5; ++v)
            for (int i = 0; i < 5; ++i)
                frame[v][i] = y[5 + 5 * v + i];
        const std::array<double, 5> rdiag = gram_schmidt(frame);
        for (int v = 0; v < 5; ++v)
            for (int i = 0; i < 5; ++i)
                y[5 + 5 * v + i] = frame[v][i];

        if (averaging) {
            for (int v = 0; v < 5; ++v)
                acc[v] += std::log(rdiag[v]);
            Vec5 base;
            for (int i = 0; i < 5; ++i)
                base[i] = y[i];
            trace_acc += trace(sys.jacobian(base)) * chunk;
        }
        t_done += chunk;

        if (averaging && t_done >= next_checkpoint - 1e-9) {
            const double span = t_done - t_transient;
            std::array<double, 5> est;
            for (int v = 0; v < 5; ++v)
                est[v] = acc[v] / span;
            std::sort(est.begin(), est.end(), std::greater<double>());
            res.convergence_trace.push_back(est);
            next_checkpoint += checkpoint_dt;
        }
    }

    for (int v = 0; v < 5; ++v)
        res.exponents[v] = acc[v] / t_total;
    std::sort(res.exponents.begin(), res.exponents.end(), std::greater<double>());
    res.avg_trace = trace_acc / t_total;
    res.dim_L = lyapunov_dimension(res.exponents);
    {
        Vec5 base;
        for (int i = 0; i < 5; ++i)
            base[i] = y[i];
        res.final_state = State5::from_vec(base);
    }

    const std::size_t nt = res.convergence_trace.size();
    if (nt >= 2) {
        const double a = res.convergence_trace[nt - 2][0];
        const double b = res.convergence_trace[nt - 1][0];
        const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
        if (std::abs(a - b) / scale > 0.20)
            res.converged = false;
    }
    return res;
}

inline LyapunovResult lyapunov_spectrum(const State5& s0, const ModelParams& p,
                                        double t_transient, double t_total,
                                        double renorm_interval, const IntegratorConfig& cfg)
{
    const SinSystem sys{p};
    return lyapunov_spectrum_for(sys, s0, t_transient, t_total, renorm_interval, cfg);
}

} // namespace sinchaos
