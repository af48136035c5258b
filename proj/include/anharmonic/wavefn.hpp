#pragma once

#include "excited.hpp"
#include "numerics.hpp"
#include "series.hpp"

#include <optional>
#include <string>
#include <vector>

namespace anharmonic {

struct WavefunctionTable {
    std::vector<Real> grid; // physical x
    std::vector<Real> psi;
    Real reliability_radius; // physical units
    int q = 0;
    Parity parity = Parity::Even;
    std::string warning;
};

// W(y) truncated; y is the rescaled coordinate.
inline Real log_psi0(const SeriesSolution& s, const Real& y) {
    Real y2 = y * y, v = 0;
    for (int n = s.order(); n >= 1; --n)
        v = v * y2 + s.a[n];
    return v * y2;
}

// Radius where the last nonzero term of W is 10^-10 of the first nonzero one.
inline Real ground_radius(const SeriesSolution& s, double ratio = 1e-10) {
    int first = 1;
    while (first <= s.order() && s.a[first] == 0)
        ++first;
    int last = s.order();
    while (last > first && s.a[last] == 0)
        --last;
    if (first > s.order() || last == first)
        return Real(-1);
    return boost::multiprecision::pow(Real(ratio) * boost::multiprecision::abs(s.a[first]) / boost::multiprecision::abs(s.a[last]),
                                      Real(1) / (2 * (last - first)));
}

// Psi_0 = exp(W) or Psi_q = P_q exp(W) on a symmetric grid of physical x.
inline WavefunctionTable sample(const SeriesSolution& s, const ExcitedState* state, int grid_size,
                                const PrecisionContext& ctx, std::optional<Real> plot_range = std::nullopt) {
    if (grid_size < 2)
        throw Error("invalid-config", "grid_size must be at least 2");
    PrecisionScope scope(ctx);
    WavefunctionTable t;
    Real r = ground_radius(s);
    if (state) {
        t.parity = state->parity;
        t.q = state->q;
        Real rp = reliability_radius(state->c, parity_offset(state->parity));
        if (rp > 0 && (r < 0 || rp < r))
            r = rp;
    }
    Real c = at_precision(s.c);
    Real R = r < 0 ? Real(-1) : r * c;
    if (plot_range) {
        Real want = at_precision(*plot_range);
        if (R >= 0 && want > R)
            t.warning = "truncated-range: requested " + to_decimal(want, 6) + " exceeds reliability radius " + to_decimal(R, 6);
        else
            R = want;
    }
    if (R < 0)
        R = 3; // terminating series: nothing limits the range
    t.reliability_radius = R;
    bool odd = state && state->parity == Parity::Odd;
    for (int i = 0; i < grid_size; ++i) {
        Real x = R * (2 * i - (grid_size - 1)) / (grid_size - 1);
        Real ax = boost::multiprecision::abs(x);
        Real y = ax / c;
        Real v = boost::multiprecision::exp(log_psi0(s, y));
        if (state)
            v *= evaluate_polynomial(state->c, y);
        if (odd && x < 0)
            v = -v;
        t.grid.push_back(x);
        t.psi.push_back(v);
    }
    return t;
}

inline int sign_changes(const std::vector<Real>& v) {
    int n = 0, last = 0;
    for (const Real& x : v) {
        int s = x > 0 ? 1 : (x < 0 ? -1 : 0);
        if (s == 0)
            continue;
        if (last != 0 && s != last)
            ++n;
        last = s;
    }
    return n;
}

} // namespace anharmonic
