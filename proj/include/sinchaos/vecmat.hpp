#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace sinchaos {

template <std::size_t N>
using Vec = std::array<double, N>;

using Vec5 = Vec<5>;
using Mat5 = std::array<std::array<double, 5>, 5>;

template <std::size_t N>
inline Vec<N> add_scaled(const Vec<N>& a, double c, const Vec<N>& b)
{
    Vec<N> r;
    for (std::size_t i = 0; i < N; ++i)
        r[i] = a[i] + c * b[i];
    return r;
}

template <std::size_t N>
inline double max_abs(const Vec<N>& a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

template <std::size_t N>
inline bool all_finite(const Vec<N>& a)
{
    for (double v : a)
        if (!std::isfinite(v))
            return false;
    return true;
}

inline Vec5 matvec(const Mat5& m, const Vec5& v)
{
    Vec5 r{};
    for (int i = 0; i < 5; ++i) {
        double s = 0.0;
        for (int j = 0; j < 5; ++j)
            s += m[i][j] * v[j];
        r[i] = s;
    }
    return r;
}

inline double trace(const Mat5& m)
{
    return m[0][0] + m[1][1] + m[2][2] + m[3][3] + m[4][4];
}

// Modified Gram-Schmidt on k column vectors of length 5, in place.
// Returns the diagonal of R (the norms of the orthogonalized columns).
inline std::array<double, 5> gram_schmidt(std::array<Vec5, 5>& q, int k = 5)
{
    std::array<double, 5> rdiag{};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < i; ++j) {
            double dot = 0.0;
            for (int c = 0; c < 5; ++c)
                dot += q[i][c] * q[j][c];
            for (int c = 0; c < 5; ++c)
                q[i][c] -= dot * q[j][c];
        }
        double nrm = 0.0;
        for (int c = 0; c < 5; ++c)
            nrm += q[i][c] * q[i][c];
        nrm = std::sqrt(nrm);
        rdiag[i] = nrm;
        for (int c = 0; c < 5; ++c)
            q[i][c] /= nrm;
    }
    return rdiag;
}

} // namespace sinchaos
