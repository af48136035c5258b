#pragma once

#include "numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <vector>

// The Eigen bridge shipped with older Boost lacks infinity()/quiet_NaN(),
// which Eigen 3.4 needs, so Real gets its own traits.
namespace Eigen {
template <>
struct NumTraits<anharmonic::Real> : GenericNumTraits<anharmonic::Real> {
    using Real = anharmonic::Real;
    using NonInteger = anharmonic::Real;
    using Literal = anharmonic::Real;
    using Nested = anharmonic::Real;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = HugeCost,
        AddCost = HugeCost,
        MulCost = HugeCost
    };
    static Real epsilon() { return std::numeric_limits<Real>::epsilon(); }
    static Real dummy_precision() { return 1000 * epsilon(); }
    static Real highest() { return (std::numeric_limits<Real>::max)(); }
    static Real lowest() { return std::numeric_limits<Real>::lowest(); }
    static Real infinity() { return std::numeric_limits<Real>::infinity(); }
    static Real quiet_NaN() { return std::numeric_limits<Real>::quiet_NaN(); }
    static int digits10() { return static_cast<int>(Real::default_precision()); }
};
} // namespace Eigen

namespace anharmonic {

struct OracleSpec {
    int M = 2;
    Real g = 1;
    Real rho = 0;
    int basis_size = 200;
    Real omega = 1;
    int levels = 10;
    int digits = 64;

    void validate() const {
        if (M < 1)
            throw Error("invalid-spec", "M must be positive");
        if (levels < 1)
            throw Error("invalid-spec", "levels must be positive");
        if (basis_size < 4 * levels + 8)
            throw Error("invalid-spec", "basis_size must be at least 4 levels + 8");
        if (omega <= 0)
            throw Error("invalid-spec", "omega must be positive");
    }
};

namespace detail {

// (X v)_i with X the position operator in the oscillator basis of frequency omega.
inline std::vector<Real> apply_x(const std::vector<Real>& v, const std::vector<Real>& sq, const Real& inv) {
    std::size_t n = v.size();
    std::vector<Real> out(n, Real(0));
    for (std::size_t i = 0; i < n; ++i) {
        Real s = 0;
        if (i + 1 < n)
            s += sq[i + 1] * v[i + 1];
        if (i > 0)
            s += sq[i] * v[i - 1];
        out[i] = s * inv;
    }
    return out;
}

// Column j of x^{2p}, rows 0..rows-1, through an extended basis so the
// truncation never reaches the rows kept.
inline std::vector<Real> power_column(int j, int two_p, int rows, const Real& omega) {
    std::size_t ext = static_cast<std::size_t>(std::max(rows, j + 1) + two_p + 1);
    std::vector<Real> sq(ext);
    for (std::size_t i = 0; i < ext; ++i)
        sq[i] = boost::multiprecision::sqrt(Real(i));
    Real inv = 1 / boost::multiprecision::sqrt(2 * omega);
    std::vector<Real> v(ext, Real(0));
    v[static_cast<std::size_t>(j)] = 1;
    for (int k = 0; k < two_p; ++k)
        v = apply_x(v, sq, inv);
    v.resize(static_cast<std::size_t>(rows));
    return v;
}

} // namespace detail

inline Real matrix_element(int i, int j, int power, const Real& omega_in, int digits = 64) {
    if (power < 0 || power % 2 != 0)
        throw Error("domain-error", "only even powers of x are supported");
    if (i < 0 || j < 0)
        throw Error("domain-error", "basis indices must be non-negative");
    PrecisionContext ctx(std::max(1, digits - kMinGuardDigits), digits);
    PrecisionScope scope(ctx);
    if (std::abs(i - j) > power || (i - j) % 2 != 0)
        return Real(0);
    auto col = detail::power_column(j, power, i + 1, at_precision(omega_in));
    return col[static_cast<std::size_t>(i)];
}

struct OracleResult {
    std::vector<Real> eigenvalues;           // ascending
    std::vector<int> parity;                 // 0 even, 1 odd
    std::vector<std::vector<Real>> vectors;  // full-basis coefficients, if requested
};

// H_ij = (2i+1) omega delta_ij + (rho - omega^2) <i|x^2|j> + g <i|x^{2M}|j>
inline std::vector<std::vector<Real>> hamiltonian(const OracleSpec& s) {
    int n = s.basis_size;
    Real omega = at_precision(s.omega), g = at_precision(s.g), rho = at_precision(s.rho);
    std::vector<std::vector<Real>> h(static_cast<std::size_t>(n), std::vector<Real>(static_cast<std::size_t>(n), Real(0)));
    Real harm = rho - omega * omega;
    for (int j = 0; j < n; ++j) {
        auto x2 = detail::power_column(j, 2, n, omega);
        auto xm = detail::power_column(j, 2 * s.M, n, omega);
        for (int i = 0; i <= j; ++i) {
            Real v = harm * x2[i] + g * xm[i];
            if (i == j)
                v += (2 * i + 1) * omega;
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    return h;
}

inline OracleResult diagonalize(const OracleSpec& spec, bool want_vectors = false) {
    spec.validate();
    PrecisionContext ctx(std::max(1, spec.digits - kMinGuardDigits), spec.digits);
    PrecisionScope scope(ctx);
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    auto h = hamiltonian(spec);
    int n = spec.basis_size;

    struct Level {
        Real e;
        int parity;
        std::vector<Real> vec;
    };
    std::vector<Level> all;
    for (int par = 0; par < 2; ++par) {
        int m = (n - par + 1) / 2;
        Mat block(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                block(a, b) = h[2 * a + par][2 * b + par];
        Eigen::SelfAdjointEigenSolver<Mat> es(block, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw Error("oracle-failure", "symmetric eigensolver did not converge");
        for (int a = 0; a < m; ++a) {
            Level L{es.eigenvalues()(a), par, {}};
            if (want_vectors) {
                L.vec.assign(static_cast<std::size_t>(n), Real(0));
                Real sign = 1;
                // fix the phase so the first sizeable component is positive
                for (int b = 0; b < m; ++b)
                    if (boost::multiprecision::abs(es.eigenvectors()(b, a)) > Real(1) / 1000) {
                        sign = es.eigenvectors()(b, a) < 0 ? -1 : 1;
                        break;
                    }
                for (int b = 0; b < m; ++b)
                    L.vec[static_cast<std::size_t>(2 * b + par)] = sign * es.eigenvectors()(b, a);
            }
            all.push_back(std::move(L));
        }
    }
    std::sort(all.begin(), all.end(), [](const Level& x, const Level& y) { return x.e < y.e; });
    OracleResult r;
    for (int i = 0; i < spec.levels && i < static_cast<int>(all.size()); ++i) {
        r.eigenvalues.push_back(all[i].e);
        r.parity.push_back(all[i].parity);
        if (want_vectors)
            r.vectors.push_back(std::move(all[i].vec));
    }
    return r;
}

// sum_n c_n phi_n(x) with normalized oscillator functions of frequency omega
inline Real oracle_wavefunction(const std::vector<Real>& coeffs, const Real& omega, const Real& x) {
    Real xi = boost::multiprecision::sqrt(omega) * x;
    Real pi = boost::multiprecision::atan(Real(1)) * 4;
    Real phi_prev = 0;
    Real phi = boost::multiprecision::pow(omega / pi, Real(1) / 4) * boost::multiprecision::exp(-xi * xi / 2);
    Real sum = 0;
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        sum += coeffs[n] * phi;
        Real next = boost::multiprecision::sqrt(Real(2) / (n + 1)) * xi * phi -
                    boost::multiprecision::sqrt(Real(n) / (n + 1)) * phi_prev;
        phi_prev = phi;
        phi = next;
    }
    return sum;
}

} // namespace anharmonic
