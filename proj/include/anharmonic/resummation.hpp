#pragma once

#include "numerics.hpp"
#include "series.hpp"

#include <optional>
#include <vector>

namespace anharmonic {

enum class Shape { Decreasing, Flat, Increasing, Oscillatory, Indeterminate };

inline const char* to_string(Shape s) {
    switch (s) {
    case Shape::Decreasing: return "Decreasing";
    case Shape::Flat: return "Flat";
    case Shape::Increasing: return "Increasing";
    case Shape::Oscillatory: return "Oscillatory";
    default: return "Indeterminate";
    }
}

inline bool decisive(Shape s) { return s == Shape::Decreasing || s == Shape::Increasing; }

struct CurveSettings {
    double delta = 1e-4;             // window tolerance on the dropped term
    double floor = 1e-30;
    double slope_threshold = 1e-2;
    int max_sign_changes = 6;
    double oscillation_noise = 1e-6; // second differences below this (relative) are ignored
    double band = 10;                // horizon ends where |v - P| leaves B |P| after entering it
    double tail_fraction = 0.2;
    int grid_points = 128;
    int min_points = 8;
    int max_grid_passes = 12;
    int roundoff_digits = 0;         // window also requires roundoff < 10^-roundoff_digits |v|; 0 disables
};

// Term j contributes coeffs[j - first] * lambda^((2j + offset - pole_order) alpha) / Gamma((2j + offset) alpha + 1).
struct BorelSeries {
    std::vector<Real> coeffs;
    int first = 1;
    int offset = 0;
    int pole_order = 0;

    int last() const { return first + static_cast<int>(coeffs.size()) - 1; }
};

inline BorelSeries ground_borel_series(const SeriesSolution& s) {
    BorelSeries b;
    b.coeffs.assign(s.a.begin() + 1, s.a.end());
    b.first = 1;
    b.offset = 0;
    b.pole_order = s.M + 1;
    return b;
}

// Straight summation, kept independent of BorelKernel.
inline Real borel_partial_sum(const std::vector<Real>& coeffs, int first, int pole_order, const Real& alpha_in,
                              const Real& lambda_in, const PrecisionContext& ctx, int offset = 0) {
    PrecisionScope scope(ctx);
    Real alpha = at_precision(alpha_in), lambda = at_precision(lambda_in);
    if (lambda <= 0)
        throw Error("domain-error", "lambda must be positive");
    Real sum = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        int n = first + static_cast<int>(i);
        Real e = (2 * n + offset) * alpha;
        sum += coeffs[i] * boost::multiprecision::pow(lambda, e - pole_order * alpha) /
               boost::multiprecision::tgamma(e + 1);
    }
    return sum;
}

struct PartialSums {
    Real value_N, value_Nm1, dropped, abs_sum;
};

// 1/Gamma table for a fixed layout, alpha and precision; Horner in x = lambda^{2 alpha}.
class BorelKernel {
public:
    BorelKernel(int first, int last, int offset, int pole_order, const Real& alpha, const PrecisionContext& ctx)
        : first_(first), last_(last), offset_(offset), pole_(pole_order), ctx_(ctx) {
        PrecisionScope scope(ctx);
        alpha_ = at_precision(alpha);
        bool integral = alpha_ == 1;
        inv_gamma_.reserve(static_cast<std::size_t>(last - first + 1));
        for (int j = first; j <= last; ++j) {
            int m = 2 * j + offset;
            Real g = integral ? factorial(static_cast<unsigned long>(m), ctx)
                              : boost::multiprecision::tgamma(m * alpha_ + 1);
            inv_gamma_.push_back(1 / g);
        }
    }

    const Real& alpha() const { return alpha_; }
    const PrecisionContext& context() const { return ctx_; }
    bool fits(const BorelSeries& b) const {
        return b.first == first_ && b.last() <= last_ && b.offset == offset_ && b.pole_order == pole_;
    }

    PartialSums evaluate(const BorelSeries& b, const Real& lambda) const {
        PrecisionScope scope(ctx_);
        Real x = boost::multiprecision::pow(lambda, 2 * alpha_);
        int J = b.last();
        Real head = 0, mag = 0;
        for (int j = J - 1; j >= b.first; --j) {
            Real t = b.coeffs[j - b.first] * inv_gamma_[j - first_];
            head = head * x + t;
            mag = mag * x + boost::multiprecision::abs(t);
        }
        Real xf = boost::multiprecision::pow(x, b.first);
        Real base = boost::multiprecision::pow(lambda, (offset_ - pole_) * alpha_);
        Real top = b.coeffs[J - b.first] * inv_gamma_[J - first_] * boost::multiprecision::pow(x, J);
        PartialSums r;
        r.value_Nm1 = head * xf * base;
        r.dropped = top * base;
        r.value_N = r.value_Nm1 + r.dropped;
        r.abs_sum = (mag * xf + boost::multiprecision::abs(top)) * boost::multiprecision::abs(base);
        return r;
    }

private:
    int first_, last_, offset_, pole_;
    PrecisionContext ctx_;
    Real alpha_;
    std::vector<Real> inv_gamma_;
};

struct ResummationCurve {
    std::vector<Real> lambda_grid, values_N, values_Nm1, dropped, abs_sum;
    Real alpha;
    int pole_order = 0;
    int order = 0;
    std::size_t window_points = 0;  // trusted prefix of the grid
    Real window_max = 0;
    std::size_t horizon_points = 0; // prefix used by the classifier
    Shape classification = Shape::Indeterminate;
    std::optional<Real> plateau;
    std::optional<Real> reference;  // known large-lambda limit, if any
};

inline ResummationCurve evaluate_curve(const BorelSeries& b, const BorelKernel& kernel, const Real& lambda_hi,
                                       int points) {
    PrecisionScope scope(kernel.context());
    ResummationCurve c;
    c.alpha = kernel.alpha();
    c.pole_order = b.pole_order;
    c.order = b.last();
    Real hi = at_precision(lambda_hi);
    for (int i = 1; i <= points; ++i) {
        Real lam = hi * i / points;
        PartialSums s = kernel.evaluate(b, lam);
        c.lambda_grid.push_back(lam);
        c.values_N.push_back(s.value_N);
        c.values_Nm1.push_back(s.value_Nm1);
        c.dropped.push_back(s.dropped);
        c.abs_sum.push_back(s.abs_sum);
    }
    return c;
}

// Number of leading grid points up to the last one where the dropped term
// (and, optionally, the roundoff estimate) is small relative to the value.
inline std::size_t validity_window(const ResummationCurve& c, double delta, double floor, int roundoff_digits = 0,
                                   int working_digits = 0) {
    Real d(delta), f(floor);
    Real eps = roundoff_digits > 0 ? pow10(-working_digits) : Real(0);
    Real eta = roundoff_digits > 0 ? pow10(-roundoff_digits) : Real(0);
    std::size_t last = 0;
    for (std::size_t i = 0; i < c.lambda_grid.size(); ++i) {
        Real scale = std::max(Real(boost::multiprecision::abs(c.values_N[i])), f);
        bool ok = boost::multiprecision::abs(c.values_N[i] - c.values_Nm1[i]) < d * scale;
        if (ok && roundoff_digits > 0)
            ok = c.abs_sum[i] * eps < eta * scale;
        if (ok)
            last = i + 1;
    }
    return last;
}

namespace detail {

inline Real tail_mean(const std::vector<Real>& v, std::size_t n, double fraction, bool absolute) {
    std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n)));
    Real s = 0;
    for (std::size_t i = n - count; i < n; ++i)
        s += absolute ? boost::multiprecision::abs(v[i]) : v[i];
    return s / count;
}

inline std::size_t band_horizon(const ResummationCurve& c, std::size_t window, const Real& ref, double band) {
    Real width = band * boost::multiprecision::abs(ref);
    bool inside = false;
    for (std::size_t i = 0; i < window; ++i) {
        bool in = boost::multiprecision::abs(c.values_N[i] - ref) <= width;
        if (in)
            inside = true;
        else if (inside)
            return i + 1;
    }
    return window;
}

} // namespace detail

inline Shape classify_curve(ResummationCurve& c, const CurveSettings& st) {
    std::size_t h = c.horizon_points;
    if (h < static_cast<std::size_t>(st.min_points))
        return c.classification = Shape::Indeterminate;
    const auto& v = c.values_N;
    Real guess = c.reference ? boost::multiprecision::abs(*c.reference) : detail::tail_mean(v, h, st.tail_fraction, true);
    Real scale = guess + Real(st.floor);

    Real noise = Real(st.oscillation_noise) * scale;
    int changes = 0, last_sign = 0;
    for (std::size_t i = 2; i < h; ++i) {
        Real d2 = v[i] - 2 * v[i - 1] + v[i - 2];
        if (boost::multiprecision::abs(d2) <= noise)
            continue;
        int sgn = d2 > 0 ? 1 : -1;
        if (last_sign != 0 && sgn != last_sign)
            ++changes;
        last_sign = sgn;
    }
    if (changes > st.max_sign_changes)
        return c.classification = Shape::Oscillatory;

    const Real& lmax = c.lambda_grid[h - 1];
    Real lref = lmax * 4 / 5;
    std::size_t j = 0;
    while (j + 1 < h && c.lambda_grid[j] < lref)
        ++j;
    Real s = (v[h - 1] - v[j]) / scale;
    if (s > st.slope_threshold)
        return c.classification = Shape::Increasing;
    if (s < -st.slope_threshold)
        return c.classification = Shape::Decreasing;
    return c.classification = Shape::Flat;
}

inline Real plateau_estimate(const ResummationCurve& c, double tail_fraction = 0.2) {
    if (c.classification != Shape::Flat || c.horizon_points == 0)
        throw Error("not-flat", "plateau is only defined for a flat curve");
    return detail::tail_mean(c.values_N, c.horizon_points, tail_fraction, false);
}

inline Real theoretical_plateau(const Real& g_eff, int M, const Real& alpha, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    Real a = at_precision(alpha);
    return -boost::multiprecision::sqrt(at_precision(g_eff)) / ((M + 1) * boost::multiprecision::tgamma((M + 1) * a + 1));
}

// Grid adaptation, window, horizon, classification and (if flat) plateau.
inline ResummationCurve build_curve(const BorelSeries& b, const BorelKernel& kernel, const CurveSettings& st,
                                    const std::optional<Real>& reference = std::nullopt,
                                    std::optional<Real> lambda_hi = std::nullopt) {
    const PrecisionContext& ctx = kernel.context();
    PrecisionScope scope(ctx);
    Real hi = lambda_hi ? at_precision(*lambda_hi) : Real(std::max(b.last(), 4)) / 4;
    ResummationCurve c;
    for (int pass = 0; pass < st.max_grid_passes; ++pass) {
        c = evaluate_curve(b, kernel, hi, st.grid_points);
        c.window_points = validity_window(c, st.delta, st.floor, st.roundoff_digits, ctx.working_digits);
        c.window_max = c.window_points ? c.lambda_grid[c.window_points - 1] : Real(0);
        if (lambda_hi)
            break;
        if (c.window_points == c.lambda_grid.size())
            hi = hi * 3 / 2;
        else if (c.window_points == 0)
            hi = hi / 4;
        else if (c.window_max * Real(1.6) < hi)
            hi = c.window_max * 3 / 2;
        else
            break;
    }
    if (reference)
        c.reference = at_precision(*reference);
    c.horizon_points = reference ? detail::band_horizon(c, c.window_points, *c.reference, st.band) : c.window_points;
    classify_curve(c, st);
    if (c.classification == Shape::Flat)
        c.plateau = plateau_estimate(c, st.tail_fraction);
    return c;
}

inline ResummationCurve ground_curve(const SeriesSolution& s, const Real& alpha, const CurveSettings& st,
                                     const PrecisionContext& ctx) {
    BorelSeries b = ground_borel_series(s);
    BorelKernel k(b.first, b.last(), b.offset, b.pole_order, alpha, ctx);
    return build_curve(b, k, st, theoretical_plateau(s.g_eff, s.M, alpha, ctx));
}

} // namespace anharmonic
