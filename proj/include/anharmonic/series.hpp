#pragma once

#include "numerics.hpp"

#include <vector>

namespace anharmonic {

enum class Mode { Scaled, Direct };

inline const char* to_string(Mode m) { return m == Mode::Scaled ? "scaled" : "direct"; }

struct ProblemSpec {
    int M = 2;
    Real g = 1;
    Mode mode = Mode::Scaled;
    int k = 4;
    Real a2 = Real(-3) / 16;
    Real rho = 0;
    int N = 24;

    void validate() const {
        if (M < 2)
            throw Error("invalid-spec", "M must be at least 2");
        if (N < M + 2)
            throw Error("invalid-spec", "N must be at least M + 2");
        if (mode == Mode::Scaled) {
            if (k != 4 && k != -4)
                throw Error("invalid-spec", "k must be +4 or -4");
            if (a2 == 0)
                throw Error("invalid-spec", "a2 must be nonzero in scaled mode");
            if (g != 1)
                throw Error("invalid-spec", "scaled mode fixes g = 1");
        } else if (g <= 0) {
            throw Error("invalid-spec", "g must be positive");
        }
    }
};

struct SeriesSolution {
    Mode mode = Mode::Scaled;
    int M = 2;
    std::vector<Real> a; // a[0] = 0, a[n] multiplies x^{2n}
    Real E, rho, c, g_eff;
    Real E_eff, rho_eff; // the same quantities in the rescaled coordinate y = x/c

    int order() const { return static_cast<int>(a.size()) - 1; }
};

namespace detail {

// sum_{m=1..n} 4 m (n-m+1) a_m a_{n-m+1}, the (W')^2 part of the x^{2n} equation
template <class T>
T quadratic_sum(const std::vector<T>& a, int n) {
    T s = 0;
    int lo = 1, hi = n;
    while (lo < hi) {
        s += T(8 * lo * hi) * a[lo] * a[hi];
        ++lo;
        --hi;
    }
    if (lo == hi)
        s += T(4 * lo * lo) * a[lo] * a[lo];
    return s;
}

// Fills a[3..N] given a[1], a[2]. At n = M the x^{2M} equation either fixes
// a_{M+1} from the coupling (direct) or keeps the supplied a_{M+1} (scaled).
template <class T>
void run_recurrence(std::vector<T>& a, int M, int N, const T* coupling) {
    for (int n = 2; n < N; ++n) {
        T s = quadratic_sum(a, n);
        T denom = T(2 * (n + 1) * (2 * n + 1));
        if (n == M) {
            if (coupling)
                a[n + 1] = (*coupling - s) / denom;
        } else {
            a[n + 1] = -s / denom;
        }
    }
}

} // namespace detail

// Scaled-mode coefficients over any field type (exact rationals in tests).
template <class T>
std::vector<T> scaled_coefficients(int M, int k, const T& a2, const T& free, int N) {
    std::vector<T> a(static_cast<std::size_t>(N) + 1, T(0));
    a[1] = T(k) * a2;
    a[2] = a2;
    a[M + 1] = free;
    detail::run_recurrence<T>(a, M, N, nullptr);
    return a;
}

template <class T>
std::vector<T> direct_coefficients(int M, const T& g, const T& rho, const T& E, int N) {
    std::vector<T> a(static_cast<std::size_t>(N) + 1, T(0));
    a[1] = -E / 2;
    a[2] = (rho - 4 * a[1] * a[1]) / 12;
    detail::run_recurrence<T>(a, M, N, &g);
    return a;
}

// g_eff read off the x^{2M} equation
template <class T>
T effective_coupling(const std::vector<T>& a, int M) {
    return T(2 * (M + 1) * (2 * M + 1)) * a[M + 1] + detail::quadratic_sum(a, M);
}

// Coefficients of x^{2n}, n = 0..N-1, of W'' + W'^2 - (rho x^2 + g x^{2M} - E).
template <class T>
std::vector<T> riccati_residual(const std::vector<T>& a, int M, const T& E, const T& rho, const T& g) {
    int N = static_cast<int>(a.size()) - 1;
    std::vector<T> r(static_cast<std::size_t>(N), T(0));
    for (int n = 0; n < N; ++n) {
        T v = T(2 * (n + 1) * (2 * n + 1)) * a[n + 1] + detail::quadratic_sum(a, n);
        if (n == 0)
            v += E;
        if (n == 1)
            v -= rho;
        if (n == M)
            v -= g;
        r[n] = v;
    }
    return r;
}

inline SeriesSolution ground_coefficients(const ProblemSpec& spec, const Real& free, const PrecisionContext& ctx) {
    spec.validate();
    PrecisionScope scope(ctx);
    SeriesSolution s;
    s.mode = spec.mode;
    s.M = spec.M;
    const int M = spec.M;
    if (spec.mode == Mode::Scaled) {
        s.a = scaled_coefficients<Real>(M, spec.k, at_precision(spec.a2), at_precision(free), spec.N);
        s.g_eff = effective_coupling(s.a, M);
        if (s.g_eff <= 0)
            throw Error("scaling-degenerate", "effective coupling is not positive, c is not real");
        s.c = boost::multiprecision::pow(s.g_eff, Real(1) / (2 * M + 2));
        s.E_eff = -2 * s.a[1];
        s.rho_eff = 4 * s.a[1] * s.a[1] + 12 * s.a[2];
        Real c2 = s.c * s.c;
        s.E = s.E_eff / c2;
        s.rho = s.rho_eff / (c2 * c2);
    } else {
        Real g = at_precision(spec.g);
        s.a = direct_coefficients<Real>(M, g, at_precision(spec.rho), at_precision(free), spec.N);
        s.g_eff = g;
        s.c = 1;
        s.E = at_precision(free);
        s.rho = at_precision(spec.rho);
        s.E_eff = s.E;
        s.rho_eff = s.rho;
    }
    return s;
}

struct PhysicalParams {
    Real E, rho, c;
};

// Closed form for M = 2 in scaled mode.
inline PhysicalParams physical_params(const Real& a2_in, const Real& a3_in, int k, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    Real a2 = at_precision(a2_in), a3 = at_precision(a3_in);
    Real d = 16 * k * a2 * a2 + 30 * a3;
    if (d <= 0)
        throw Error("scaling-degenerate", "16 k a2^2 + 30 a3 must be positive");
    Real cube = boost::multiprecision::cbrt(d);
    PhysicalParams p;
    p.E = -2 * k * a2 / cube;
    p.rho = (4 * k * k * a2 * a2 + 12 * a2) / (cube * cube);
    p.c = boost::multiprecision::sqrt(cube);
    return p;
}

// W'' + W'^2 - V + E at a point, in the rescaled coordinate.
inline Real residual_at(const SeriesSolution& s, const Real& x) {
    Real x2 = x * x, d1 = 0, d2 = 0;
    for (int n = s.order(); n >= 1; --n) {
        d1 = d1 * x2 + 2 * n * s.a[n];
        d2 = d2 * x2 + 2 * n * (2 * n - 1) * s.a[n];
    }
    Real w1 = d1 * x;                   // W'
    Real w2 = d2;                       // W'' (n=1 term is 2 a1 x^0)
    Real v = s.rho_eff * x2 + s.g_eff * boost::multiprecision::pow(x2, s.M) - s.E_eff;
    return w2 + w1 * w1 - v;
}

} // namespace anharmonic
