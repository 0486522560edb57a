#pragma once

// Full-system equilibria: scalar-reduction root scan, 5D Newton polish,
// spectrum of the analytic Jacobian and the resulting topological
// classification, plus the unstable directions used to seed separatrix and
// saddle-focus-circle trajectories.

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "model.hpp"
#include "vecmat.hpp"

namespace sinchaos {

enum class EqClass { StableFocusNode, Saddle41, Saddle32, SaddleFocus32, Degenerate };

inline const char* to_string(EqClass c)
{
    switch (c) {
        case EqClass::StableFocusNode: return "StableFocusNode";
        case EqClass::Saddle41: return "Saddle41";
        case EqClass::Saddle32: return "Saddle32";
        case EqClass::SaddleFocus32: return "SaddleFocus32";
        default: return "Degenerate";
    }
}

struct EigenDecomposition {
    std::array<std::complex<double>, 5> values;              // sorted by real part ascending
    std::array<std::array<std::complex<double>, 5>, 5> vectors;  // vectors[k] matches values[k]
};

struct Equilibrium {
    State5 state;
    EigenDecomposition eig;
    EqClass classification;
};

struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WrongClassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline EigenDecomposition eigen5(const Mat5& m)
{
    Eigen::Matrix<double, 5, 5> a;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (!std::isfinite(m[i][j]))
                throw std::domain_error("eigen5: non-finite matrix entry");
            a(i, j) = m[i][j];
        }
    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> solver(a, true);
    if (solver.info() != Eigen::Success)
        throw NoConvergenceError("eigen5: QR iteration failed to converge");

    std::array<int, 5> order{0, 1, 2, 3, 4};
    const auto vals = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (vals(i).real() != vals(j).real())
            return vals(i).real() < vals(j).real();
        return vals(i).imag() < vals(j).imag();
    });

    EigenDecomposition d;
    const auto vecs = solver.eigenvectors();
    for (int k = 0; k < 5; ++k) {
        d.values[k] = vals(order[k]);
        for (int r = 0; r < 5; ++r)
            d.vectors[k][r] = vecs(r, order[k]);
    }
    return d;
}

inline EqClass classify(const std::array<std::complex<double>, 5>& values)
{
    int n_pos = 0;
    int n_pos_complex = 0;
    for (const auto& v : values) {
        if (v.real() > 0.0) {
            ++n_pos;
            if (v.imag() != 0.0)
                ++n_pos_complex;
        }
    }
    if (n_pos == 0)
        return EqClass::StableFocusNode;
    if (n_pos == 1 && n_pos_complex == 0)
        return EqClass::Saddle41;
    if (n_pos == 2 && n_pos_complex == 0)
        return EqClass::Saddle32;
    if (n_pos == 2 && n_pos_complex == 2)
        return EqClass::SaddleFocus32;
    return EqClass::Degenerate;
}

struct EquilibriumSearchOptions {
    double scan_lo = -90.0;
    double scan_hi = 40.0;
    int scan_intervals = 2000;
    double dedup_dV = 1e-6;
};

// Locates all equilibria by reducing the 5D system to a scalar voltage
// equation (gates and the slow pair at their V-slaved rest values), then
// Newton-polishing each bracketed root in the full 5D system.
inline std::vector<Equilibrium> find_equilibria(const ModelParams& p,
                                                const EquilibriumSearchOptions& opt = {})
{
    auto slaved_state = [&](double V) {
        const GatingValues g = gating(V, p);
        const double Ca = p.K_c * g.x_inf * (p.E_Ca - V + p.dCa);
        return State5{V, g.h_inf, g.n_inf, g.x_inf, Ca};
    };
    auto scalar_residual = [&](double V) { return rhs(slaved_state(V), p).V; };

    std::vector<double> bracket_roots;
    const double dv = (opt.scan_hi - opt.scan_lo) / opt.scan_intervals;
    double Va = opt.scan_lo, Fa = scalar_residual(Va);
    for (int i = 1; i <= opt.scan_intervals; ++i) {
        const double Vb = opt.scan_lo + i * dv;
        const double Fb = scalar_residual(Vb);
        if ((Fa < 0.0 && Fb >= 0.0) || (Fa > 0.0 && Fb <= 0.0)) {
            double lo = Va, hi = Vb, flo = Fa;
            for (int it = 0; it < 70; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = scalar_residual(mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            bracket_roots.push_back(0.5 * (lo + hi));
        }
        Va = Vb;
        Fa = Fb;
    }

    std::vector<Equilibrium> out;
    for (double V0 : bracket_roots) {
        State5 s = slaved_state(V0);
        for (int it = 0; it < 25; ++it) {
            const State5 f = rhs(s, p);
            const Vec5 fv = f.to_vec();
            if (max_abs(fv) < 1e-13)
                break;
            const Mat5 J = jacobian(s, p);
            Eigen::Matrix<double, 5, 5> a;
            Eigen::Matrix<double, 5, 1> b;
            for (int i = 0; i < 5; ++i) {
                b(i) = -fv[i];
                for (int j = 0; j < 5; ++j)
                    a(i, j) = J[i][j];
            }
            const Eigen::Matrix<double, 5, 1> d = a.partialPivLu().solve(b);
            Vec5 sv = s.to_vec();
            for (int i = 0; i < 5; ++i)
                sv[i] += d(i);
            s = State5::from_vec(sv);
        }
        bool dup = false;
        for (const Equilibrium& e : out)
            if (std::abs(e.state.V - s.V) < opt.dedup_dV)
                dup = true;
        if (dup)
            continue;

        Equilibrium eq;
        eq.state = s;
        eq.eig = eigen5(jacobian(s, p));
        eq.classification = classify(eq.eig.values);
        out.push_back(eq);
    }
    std::sort(out.begin(), out.end(),
              [](const Equilibrium& a, const Equilibrium& b) { return a.state.V < b.state.V; });
    return out;
}

// Typical state ranges used to normalize direction vectors: V spans ~100 mV,
// gates are order one, [Ca] spans ~2 units on the attractor.
inline constexpr Vec5 kStateScale{100.0, 1.0, 1.0, 1.0, 2.0};

struct SeparatrixSeed {
    State5 beneath;   // the seed with negative V- and x-offsets from the saddle
    State5 above;
    Vec5 direction;   // unit unstable direction in normalized units, mapped back
};

struct FocusPlane {
    Vec5 u1;  // orthonormal (in normalized units) spanning pair of the unstable plane
    Vec5 u2;
};

inline State5 offset_state(const State5& s, const Vec5& d, double c)
{
    Vec5 v = s.to_vec();
    for (int i = 0; i < 5; ++i)
        v[i] += c * d[i];
    return State5::from_vec(v);
}

// Unstable directions of a classified equilibrium. Saddle41 yields the two
// separatrix seeds at distance eps (in normalized units) along the real
// unstable eigenvector, sign-fixed so "beneath" points down in x and V.
// SaddleFocus32 yields the orthonormalized real plane of the unstable complex
// pair for the small-circle construction.
inline std::variant<SeparatrixSeed, FocusPlane>
unstable_directions(const Equilibrium& eq, double eps = 1e-4)
{
    if (eq.classification == EqClass::Saddle41) {
        int k = -1;
        for (int i = 0; i < 5; ++i)
            if (eq.eig.values[i].real() > 0.0)
                k = i;
        Vec5 w{};
        for (int i = 0; i < 5; ++i)
            w[i] = eq.eig.vectors[k][i].real() / kStateScale[i];
        double nrm = 0.0;
        for (double c : w)
            nrm += c * c;
        nrm = std::sqrt(nrm);
        for (double& c : w)
            c /= nrm;
        const bool upward = (w[3] != 0.0) ? (w[3] > 0.0) : (w[0] > 0.0);
        if (upward)
            for (double& c : w)
                c = -c;
        Vec5 dir{};
        for (int i = 0; i < 5; ++i)
            dir[i] = w[i] * kStateScale[i];
        SeparatrixSeed seed;
        seed.direction = dir;
        seed.beneath = offset_state(eq.state, dir, eps);
        seed.above = offset_state(eq.state, dir, -eps);
        return seed;
    }
    if (eq.classification == EqClass::SaddleFocus32) {
        int k = -1;
        for (int i = 0; i < 5; ++i)
            if (eq.eig.values[i].real() > 0.0 && eq.eig.values[i].imag() > 0.0)
                k = i;
        Vec5 a{}, b{};
        for (int i = 0; i < 5; ++i) {
            a[i] = eq.eig.vectors[k][i].real() / kStateScale[i];
            b[i] = eq.eig.vectors[k][i].imag() / kStateScale[i];
        }
        double na = 0.0;
        for (double c : a)
            na += c * c;
        na = std::sqrt(na);
        for (double& c : a)
            c /= na;
        double dot = 0.0;
        for (int i = 0; i < 5; ++i)
            dot += a[i] * b[i];
        for (int i = 0; i < 5; ++i)
            b[i] -= dot * a[i];
        double nb = 0.0;
        for (double c : b)
            nb += c * c;
        nb = std::sqrt(nb);
        for (double& c : b)
            c /= nb;
        FocusPlane plane;
        for (int i = 0; i < 5; ++i) {
            plane.u1[i] = a[i] * kStateScale[i];
            plane.u2[i] = b[i] * kStateScale[i];
        }
        return plane;
    }
    throw WrongClassError("unstable_directions: equilibrium is neither Saddle41 nor SaddleFocus32");
}

// Point on the small circle of radius eps (normalized units) around a
// saddle-focus, in the plane of its unstable complex pair.
inline State5 focus_circle_point(const Equilibrium& eq, const FocusPlane& plane, double eps,
                                 double theta)
{
    Vec5 v = eq.state.to_vec();
    const double c = std::cos(theta), s = std::sin(theta);
    for (int i = 0; i < 5; ++i)
        v[i] += eps * (plane.u1[i] * c + plane.u2[i] * s);
    return State5::from_vec(v);
}

// Convenience selectors for the two persistent equilibria on the dune. Both
// live in the hyperpolarized range (V below roughly -35 mV in the studied
// parameter frame); the cutoff excludes the depolarization-block equilibrium
// that sits near -20 mV with a fast unstable pair. The "lower" equilibrium is
// the one with the smaller slow coordinates.
inline constexpr double kHyperpolarizedCutoff = -30.0;

inline const Equilibrium* upper_saddle(const std::vector<Equilibrium>& eqs)
{
    const Equilibrium* best = nullptr;
    for (const Equilibrium& e : eqs)
        if (e.classification == EqClass::Saddle41 && e.state.V < kHyperpolarizedCutoff)
            if (!best || e.state.x > best->state.x)
                best = &e;
    return best;
}

inline const Equilibrium* lower_equilibrium(const std::vector<Equilibrium>& eqs)
{
    const Equilibrium* up = upper_saddle(eqs);
    const Equilibrium* best = nullptr;
    for (const Equilibrium& e : eqs) {
        if (&e == up || e.state.V >= kHyperpolarizedCutoff)
            continue;
        if (up && e.state.x >= up->state.x)
            continue;
        if (!best || e.state.x > best->state.x)
            best = &e;
    }
    return best;
}

} // namespace sinchaos
