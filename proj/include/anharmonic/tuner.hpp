#pragma once

#include "numerics.hpp"
#include "resummation.hpp"
#include "series.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace anharmonic {

struct TuneOptions {
    int target_digits = 16;
    int n_start = 24;
    int n_cap = 400;
    int alpha_start_tenths = 0;   // alpha in tenths so the schedule is exact; 0 picks by M
    int alpha_floor_tenths = 3;
    int scan_points = 64;
    std::optional<std::pair<Real, Real>> scan_range;
    double digits_per_order = 0.18; // escalate N once the bracket is below 10^(-0.18 N)
    double scale_floor = 0;         // digits are relative to max(|parameter|, floor); 0 = 1e-3 of the scan span
    double plateau_tolerance = 0.05; // accepted flips sit within this fraction of the theoretical plateau
    CurveSettings curve;
};

inline Real alpha_value(int tenths) { return Real(tenths) / 10; }

// The analyticity wedge of W narrows as M grows; empirically alpha about
// 2.4/M keeps the off-axis singularities suppressed for M up to 6.
inline int default_alpha_tenths(int M) { return std::clamp(24 / std::max(M, 1), 3, 10); }

// Working precision for a tuning run: the numerics guard rule plus room for
// the cancellation inside the partial sums, which grows about 0.25 digits per
// order at the edge of the window.
inline PrecisionContext tuning_context(int target_digits, int N) {
    int decimal = target_digits + 4;
    int guard = std::max(kMinGuardDigits, (15 * N + 99) / 100);
    int cancellation = (15 * N + 99) / 100;
    return {decimal, decimal + guard + cancellation};
}

inline CurveSettings settings_for(const TuneOptions& opt) {
    CurveSettings st = opt.curve;
    if (st.roundoff_digits == 0)
        st.roundoff_digits = opt.target_digits + 3;
    return st;
}

inline int relative_digits(const Real& lo, const Real& hi, const Real& floor = Real(0)) {
    Real mid = (lo + hi) / 2;
    Real w = hi - lo;
    if (w <= 0)
        return 1000;
    Real scale = std::max<Real>(boost::multiprecision::abs(mid), floor);
    if (scale == 0)
        scale = std::max<Real>(boost::multiprecision::abs(lo), boost::multiprecision::abs(hi));
    if (scale == 0)
        return 0;
    return static_cast<int>(std::floor(static_cast<double>(-boost::multiprecision::log10(w / scale))));
}

// Classifies one trial value of the free parameter at order N and alpha.
using Probe = std::function<Shape(const Real& parameter, int N, int alpha_tenths)>;

struct Flip {
    Real lo, hi;
    Shape lo_shape = Shape::Indeterminate, hi_shape = Shape::Indeterminate;
};

struct ScanResult {
    std::vector<Flip> flips;
    std::vector<std::pair<Real, Shape>> samples;
    int alpha_tenths = 10;
};

// Linear scan; a flip is any pair of neighbouring decisive labels that
// differ, with non-decisive samples in between ignored.
inline ScanResult scan_for_flips(const Probe& probe, const Real& lo, const Real& hi, int points, int N, int alpha_tenths,
                                 int alpha_floor_tenths) {
    ScanResult r;
    for (int a = alpha_tenths; a >= alpha_floor_tenths; --a) {
        r = ScanResult{};
        r.alpha_tenths = a;
        bool oscillating = false;
        std::optional<std::pair<Real, Shape>> prev;
        for (int i = 0; i < points; ++i) {
            Real x = lo + (hi - lo) * i / (points - 1);
            Shape s = Shape::Indeterminate;
            try {
                s = probe(x, N, a);
            } catch (const Error& e) {
                if (e.signal() != "scaling-degenerate")
                    throw;
            }
            r.samples.emplace_back(x, s);
            if (s == Shape::Oscillatory)
                oscillating = true;
            if (!decisive(s))
                continue;
            if (prev && prev->second != s)
                r.flips.push_back({prev->first, x, prev->second, s});
            prev = std::make_pair(x, s);
        }
        if (!r.flips.empty() || !oscillating)
            return r;
    }
    throw Error("alpha-exhausted", "scan stays oscillatory down to the alpha floor");
}

struct Refinement {
    Real parameter, lo, hi;
    Shape lo_shape = Shape::Indeterminate, hi_shape = Shape::Indeterminate;
    int digits_achieved = 0;
    bool converged = false;
    bool endpoints_verified = false;
    int N_final = 0;
    int alpha_tenths = 10;
    int steps = 0;
};

// Bisection on the classifier flip with order escalation. The bracket keeps
// its orientation: the lo end always classifies as lo_shape.
inline Refinement refine_flip(const Probe& probe, const Flip& flip, const TuneOptions& opt, int N0, int alpha_tenths,
                              const std::function<PrecisionContext(int)>& context_for) {
    Refinement r;
    const Real floor(opt.scale_floor);
    auto rel = [&floor](const Real& a, const Real& b) { return relative_digits(a, b, floor); };
    int N = N0;
    int a = alpha_tenths;
    PrecisionContext ctx = context_for(N);
    Real lo = at_precision(flip.lo, ctx), hi = at_precision(flip.hi, ctx);
    r.lo_shape = flip.lo_shape;
    r.hi_shape = flip.hi_shape;
    // A lower order can mislabel points near the root, so after each
    // escalation both ends are re-checked and pushed outward until they
    // carry their labels again.
    // Gives up (returns false) when an end keeps coming back without a usable
    // window: the order has outrun what the working precision can resolve.
    auto escalate = [&]() {
        N = std::min(2 * N, opt.n_cap);
        ctx = context_for(N);
        PrecisionScope scope(ctx);
        lo = at_precision(lo);
        hi = at_precision(hi);
        auto widen = [&](Real& end, Real& other, Shape want, Shape opposite, int dir) {
            Real w = hi - lo;
            int blank = 0;
            Shape s = probe(end, N, a);
            for (int k = 0; s != want; ++k, ++r.steps) {
                // stepping out of a flat zone is expected; an empty window is not
                blank = s == Shape::Indeterminate || s == Shape::Oscillatory ? blank + 1 : 0;
                if (blank >= 3 || k >= 40)
                    return false;
                if (s == opposite)
                    other = end;
                end += dir * w;
                w *= 2;
                s = probe(end, N, a);
            }
            return true;
        };
        return widen(lo, hi, r.lo_shape, r.hi_shape, -1) && widen(hi, lo, r.hi_shape, r.lo_shape, +1);
    };
    const int max_steps = 20000;
    while (r.steps < max_steps) {
        if (rel(lo, hi) >= opt.target_digits) {
            r.converged = true;
            break;
        }
        if (N < opt.n_cap && rel(lo, hi) >= static_cast<int>(std::floor(opt.digits_per_order * N))) {
            if (!escalate())
                break;
            continue;
        }
        Real mid;
        {
            PrecisionScope scope(ctx);
            mid = (lo + hi) / 2;
        }
        Shape s = probe(mid, N, a);
        ++r.steps;
        if (s == r.lo_shape) {
            lo = mid;
        } else if (s == r.hi_shape) {
            hi = mid;
        } else if (s == Shape::Oscillatory) {
            if (a <= opt.alpha_floor_tenths)
                throw Error("alpha-exhausted", "curve stays oscillatory at the alpha floor");
            --a;
        } else {
            // Mid sits in the flat zone. Pull in whichever end stays decisive
            // part of the way to mid (1/2, 1/4, .. of the gap); only when
            // neither does is a higher order needed.
            bool moved = false;
            for (int side = 0; side < 2 && !moved; ++side) {
                Real& end = side == 0 ? lo : hi;
                Shape want = side == 0 ? r.lo_shape : r.hi_shape;
                for (int j = 1; j <= 4 && !moved; ++j) {
                    Real q;
                    {
                        PrecisionScope scope(ctx);
                        q = end + (mid - end) / (1 << j);
                    }
                    ++r.steps;
                    if (probe(q, N, a) == want) {
                        end = q;
                        moved = true;
                    }
                }
            }
            if (moved)
                continue;
            if (N >= opt.n_cap || !escalate())
                break; // resolution exhausted
        }
    }
    {
        PrecisionScope scope(ctx);
        r.parameter = (lo + hi) / 2;
    }
    r.lo = lo;
    r.hi = hi;
    r.digits_achieved = rel(lo, hi);
    r.N_final = N;
    r.alpha_tenths = a;
    r.endpoints_verified = probe(lo, N, a) == r.lo_shape && probe(hi, N, a) == r.hi_shape;
    return r;
}

struct TuneResult {
    Mode mode = Mode::Scaled;
    int M = 2;
    Real g = 1;
    int k = 4;
    Real a2;          // scaled mode input (or tuned value for tune_to_rho)
    Real rho_input;   // direct mode input or tune_to_rho target
    std::string parameter_name;
    Real parameter, lo, hi;
    Shape lo_shape = Shape::Indeterminate, hi_shape = Shape::Indeterminate;
    int target_digits = 0;
    int digits_achieved = 0;
    bool converged = false;
    bool endpoints_verified = false;
    Real E, rho, g_eff, c;
    int N_final = 0;
    Real alpha_used;
    Real plateau, plateau_reference;
    bool plateau_flat = false;
    int steps = 0;
    std::optional<Real> inner_parameter; // a_{M+1} when the outer loop tuned a2
    std::optional<Real> rho_residual;    // rho - target for tune_to_rho
};

inline std::string free_parameter_name(const ProblemSpec& spec) {
    return spec.mode == Mode::Scaled ? "a" + std::to_string(spec.M + 1) : "E";
}

inline std::pair<Real, Real> default_scan_range(const ProblemSpec& spec) {
    if (spec.mode == Mode::Direct)
        return {Real(-10), Real(10)};
    return {Real(0), Real(1) / 10};
}

namespace detail {

// Ground-state probe with the series and kernel reused across calls.
class GroundProbe {
public:
    GroundProbe(ProblemSpec spec, const TuneOptions& opt) : spec_(std::move(spec)), opt_(opt), st_(settings_for(opt)) {}

    // A trial point with no real scaling carries no label.
    Shape operator()(const Real& p, int N, int alpha_tenths) {
        try {
            return curve(p, N, alpha_tenths).classification;
        } catch (const Error& e) {
            if (e.signal() != "scaling-degenerate")
                throw;
            return Shape::Indeterminate;
        }
    }

    ResummationCurve curve(const Real& p, int N, int alpha_tenths) {
        PrecisionContext ctx = tuning_context(opt_.target_digits, N);
        ProblemSpec sp = spec_;
        sp.N = N;
        SeriesSolution s = ground_coefficients(sp, p, ctx);
        BorelSeries b = ground_borel_series(s);
        const BorelKernel& k = kernel(b, alpha_tenths, ctx);
        return build_curve(b, k, st_, theoretical_plateau(s.g_eff, s.M, k.alpha(), ctx));
    }

    const CurveSettings& settings() const { return st_; }

private:
    const BorelKernel& kernel(const BorelSeries& b, int alpha_tenths, const PrecisionContext& ctx) {
        auto key = std::make_pair(b.last(), alpha_tenths);
        auto it = kernels_.find(key);
        if (it == kernels_.end() || it->second.context().working_digits != ctx.working_digits)
            it = kernels_.insert_or_assign(key, BorelKernel(b.first, b.last(), b.offset, b.pole_order,
                                                            alpha_value(alpha_tenths), ctx)).first;
        return it->second;
    }

    ProblemSpec spec_;
    TuneOptions opt_;
    CurveSettings st_;
    std::map<std::pair<int, int>, BorelKernel> kernels_;
};

// Mean over the trailing part of the horizon, shrinking the horizon until the
// classifier calls the curve flat.
inline bool flat_plateau(ResummationCurve c, const CurveSettings& st, Real& out) {
    std::size_t h = c.horizon_points;
    while (h >= static_cast<std::size_t>(st.min_points)) {
        c.horizon_points = h;
        if (classify_curve(c, st) == Shape::Flat) {
            out = plateau_estimate(c, st.tail_fraction);
            return true;
        }
        h = h * 9 / 10;
    }
    c.horizon_points = std::max<std::size_t>(c.horizon_points, 1);
    out = detail::tail_mean(c.values_N, c.horizon_points, st.tail_fraction, false);
    return false;
}

} // namespace detail

namespace detail {

inline TuneResult result_from(const ProblemSpec& spec, const TuneOptions& opt, const Refinement& ref, GroundProbe& gp) {
    TuneResult t;
    t.mode = spec.mode;
    t.M = spec.M;
    t.g = spec.g;
    t.k = spec.k;
    t.a2 = spec.a2;
    t.rho_input = spec.rho;
    t.parameter_name = free_parameter_name(spec);
    t.parameter = ref.parameter;
    t.lo = ref.lo;
    t.hi = ref.hi;
    t.lo_shape = ref.lo_shape;
    t.hi_shape = ref.hi_shape;
    t.target_digits = opt.target_digits;
    t.digits_achieved = ref.digits_achieved;
    t.converged = ref.converged;
    t.endpoints_verified = ref.endpoints_verified;
    t.N_final = ref.N_final;
    t.steps = ref.steps;
    PrecisionContext ctx = tuning_context(opt.target_digits, ref.N_final);
    ProblemSpec sp = spec;
    sp.N = ref.N_final;
    SeriesSolution s = ground_coefficients(sp, ref.parameter, ctx);
    t.E = s.E;
    t.rho = s.rho;
    t.g_eff = s.g_eff;
    t.c = s.c;
    t.alpha_used = alpha_value(ref.alpha_tenths);
    ResummationCurve c = gp.curve(ref.parameter, ref.N_final, ref.alpha_tenths);
    t.plateau_reference = *c.reference;
    t.plateau_flat = flat_plateau(c, gp.settings(), t.plateau);
    return t;
}

inline bool plausible(const TuneResult& t, double tolerance) {
    if (!t.endpoints_verified || !t.plateau_flat)
        return false;
    return boost::multiprecision::abs(t.plateau - t.plateau_reference) <=
           Real(tolerance) * boost::multiprecision::abs(t.plateau_reference);
}

} // namespace detail

// Scan, then bisect the lowest-energy flip that survives verification: its
// end labels must hold at the final order and its plateau must sit near the
// theoretical value. Failing that, alpha drops by 0.1 and the scan repeats.
inline TuneResult tune_ground(const ProblemSpec& spec_in, const TuneOptions& opt_in) {
    ProblemSpec spec = spec_in;
    spec.N = std::max(spec.N, spec.M + 2);
    spec.validate();
    TuneOptions opt = opt_in;
    auto range = opt.scan_range ? *opt.scan_range : default_scan_range(spec);
    if (opt.scale_floor <= 0)
        opt.scale_floor = 1e-3 * std::abs(static_cast<double>(range.second - range.first));
    int N0 = std::max(std::min(opt.n_start, opt.n_cap), spec.M + 2);
    detail::GroundProbe gp(spec, opt);
    Probe probe = [&gp](const Real& p, int N, int a) { return gp(p, N, a); };
    auto context_for = [&opt](int N) { return tuning_context(opt.target_digits, N); };

    PrecisionContext ctx0 = context_for(N0);
    Real lo, hi;
    {
        PrecisionScope scope(ctx0);
        lo = at_precision(range.first);
        hi = at_precision(range.second);
    }
    int alpha = opt.alpha_start_tenths > 0 ? opt.alpha_start_tenths : default_alpha_tenths(spec.M);
    std::optional<TuneResult> fallback;
    bool saw_flip = false;
    while (alpha >= opt.alpha_floor_tenths) {
        ScanResult scan = scan_for_flips(probe, lo, hi, opt.scan_points, N0, alpha, opt.alpha_floor_tenths);
        std::vector<std::pair<Real, const Flip*>> order;
        for (const Flip& f : scan.flips) {
            ProblemSpec sp = spec;
            sp.N = spec.M + 2;
            try {
                PrecisionScope scope(ctx0);
                order.emplace_back(ground_coefficients(sp, (f.lo + f.hi) / 2, ctx0).E, &f);
            } catch (const Error&) {
            }
        }
        std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (const auto& [E, f] : order) {
            saw_flip = true;
            Refinement ref = refine_flip(probe, *f, opt, N0, scan.alpha_tenths, context_for);
            std::optional<TuneResult> tr;
            try {
                tr = detail::result_from(spec, opt, ref, gp);
            } catch (const Error& e) {
                // widening can carry a spurious bracket out of the real-scaling region
                if (e.signal() != "scaling-degenerate")
                    throw;
                continue;
            }
            TuneResult& t = *tr;
            if (detail::plausible(t, opt.plateau_tolerance))
                return t;
            if (!fallback)
                fallback = t;
        }
        alpha = scan.alpha_tenths - 1;
    }
    if (!saw_flip)
        throw Error("bracket-not-found", "no classifier flip in the scan range");
    throw Error("bracket-not-found", "no flip in the scan range verifies as a flat ground-state curve");
}

// Series of the tuned ground state at any order.
inline SeriesSolution tuned_series(const TuneResult& t, int N, const PrecisionContext& ctx) {
    ProblemSpec sp;
    sp.M = t.M;
    sp.g = t.g;
    sp.mode = t.mode;
    sp.k = t.k;
    sp.a2 = t.a2;
    sp.rho = t.rho_input;
    sp.N = N;
    return ground_coefficients(sp, t.mode == Mode::Scaled ? (t.inner_parameter ? *t.inner_parameter : t.parameter)
                                                           : t.parameter, ctx);
}

// Outer loop on a2 (scaled mode, k = +4 by default) so the inner-tuned rho
// hits the target. rho is 0 at a2 = -3/16 whatever a3 is, decreases to -inf
// as a2 -> 0-, and grows for a2 < -3/16.
inline TuneResult tune_to_rho(const Real& target_in, const ProblemSpec& base, const TuneOptions& opt,
                              int inner_extra_digits = 4) {
    if (base.mode != Mode::Scaled || base.M != 2)
        throw Error("invalid-spec", "tune_to_rho works in scaled mode with M = 2");
    TuneOptions inner = opt;
    inner.target_digits = opt.target_digits + inner_extra_digits;
    PrecisionContext ctx = tuning_context(inner.target_digits, opt.n_cap);
    PrecisionScope scope(ctx);
    Real target = at_precision(target_in);
    Real root = Real(-3) / 16;

    // Inner accuracy follows the current residual: early trial points only
    // need a few digits of rho.
    auto solve = [&](const Real& a2, int digits) {
        ProblemSpec sp = base;
        sp.a2 = a2;
        TuneOptions o = inner;
        o.target_digits = std::clamp(digits, 8, inner.target_digits);
        TuneResult r = tune_ground(sp, o);
        r.inner_parameter = r.parameter;
        r.parameter_name = "a2";
        r.a2 = a2;
        return r;
    };
    auto digits_for = [&](const Real& f) {
        if (f == 0)
            return inner.target_digits;
        return static_cast<int>(std::ceil(-static_cast<double>(boost::multiprecision::log10(boost::multiprecision::abs(f))))) + 6;
    };
    auto finish = [&](TuneResult r, const Real& lo, const Real& hi, int steps) {
        PrecisionScope s2(ctx);
        r.parameter = r.a2;
        r.lo = std::min<Real>(lo, hi);
        r.hi = std::max<Real>(lo, hi);
        r.rho_input = target;
        r.target_digits = opt.target_digits;
        r.steps = steps;
        return r;
    };

    if (target == 0) {
        TuneResult r = solve(root, inner.target_digits);
        r.rho_residual = r.rho;
        return finish(r, root, root, 0);
    }

    Real tol = pow10(-opt.target_digits) * std::max<Real>(Real(1), boost::multiprecision::abs(target));
    // f(a2) = rho(a2) - target; f(root) = -target exactly.
    Real a_near = root, f_near = -target;
    Real a_far, f_far;
    TuneResult last;
    int steps = 0;
    bool found = false;
    for (int j = 1; j <= 60 && !found; ++j) {
        a_far = target < 0 ? root * boost::multiprecision::pow(Real(2), -j)
                           : root * (1 + boost::multiprecision::pow(Real(2), j - 4));
        last = solve(a_far, 8);
        ++steps;
        f_far = last.rho - target;
        if ((f_far > 0) != (f_near > 0))
            found = true;
        else {
            a_near = a_far;
            f_near = f_far;
        }
    }
    if (!found)
        throw Error("outer-bracket-not-found", "could not bracket the target rho in a2");

    // Illinois regula falsi.
    Real lo = a_near, flo = f_near, hi = a_far, fhi = f_far;
    int side = 0;
    std::optional<TuneResult> best;
    Real best_f = f_far;
    for (int it = 0; it < 200; ++it) {
        Real x = (lo * fhi - hi * flo) / (fhi - flo);
        Real fmin = std::min<Real>(boost::multiprecision::abs(flo), boost::multiprecision::abs(fhi));
        TuneResult r = solve(x, digits_for(fmin));
        ++steps;
        Real fx = r.rho - target;
        if (!best || boost::multiprecision::abs(fx) < boost::multiprecision::abs(best_f)) {
            best = r;
            best_f = fx;
        }
        if (boost::multiprecision::abs(fx) <= tol && r.target_digits == inner.target_digits) {
            best = r;
            best->rho_residual = fx;
            return finish(*best, lo, hi, steps);
        }
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
            if (side == -1)
                flo /= 2;
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if (side == 1)
                fhi /= 2;
            side = 1;
        }
        if (relative_digits(std::min<Real>(lo, hi), std::max<Real>(lo, hi)) >= inner.target_digits + 2)
            break;
    }
    best->rho_residual = best_f;
    best->converged = false;
    return finish(*best, lo, hi, steps);
}

struct SweepRow {
    Real a2;
    std::optional<TuneResult> result;
    std::string error; // signal name when the row failed
};

inline std::vector<SweepRow> sweep(const Real& a2_lo, const Real& a2_hi, int steps, const ProblemSpec& base,
                                   const TuneOptions& opt) {
    if (base.mode != Mode::Scaled)
        throw Error("invalid-spec", "sweep runs in scaled mode");
    std::vector<SweepRow> rows;
    PrecisionContext ctx = tuning_context(opt.target_digits, opt.n_cap);
    for (int i = 0; i < steps; ++i) {
        SweepRow row;
        {
            PrecisionScope scope(ctx);
            Real lo = at_precision(a2_lo), hi = at_precision(a2_hi);
            row.a2 = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
        }
        try {
            ProblemSpec sp = base;
            sp.a2 = row.a2;
            row.result = tune_ground(sp, opt);
        } catch (const Error& e) {
            row.error = e.signal();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace anharmonic
