#pragma once

#include "numerics.hpp"
#include "resummation.hpp"
#include "series.hpp"
#include "tuner.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace anharmonic {

enum class Parity { Even, Odd };

inline const char* to_string(Parity p) { return p == Parity::Even ? "even" : "odd"; }
inline int parity_offset(Parity p) { return p == Parity::Even ? 0 : 1; }

// Exponent convention for odd prefactors in T_N. Actual: x^{2j+1} maps to
// lambda^{(2j+1) alpha} / Gamma((2j+1) alpha + 1), so T tends to P at infinity.
// Reduced: x^{2j+1} maps to lambda^{2j alpha} / Gamma(2j alpha + 1).
enum class OddIndex { Actual, Reduced };

struct ExcitedState {
    Parity parity = Parity::Even;
    std::vector<Real> c;   // c[n] multiplies y^n; only one parity is populated
    Real E_q;              // excitation energy in the rescaled coordinate
    Real tau;              // c2 (even) or -c3 (odd)
    int nodes = -1;
    int q = -1;
    std::string label_source; // "nodes", "oracle" or empty
    Real alpha_used;

    // filled in by tune_excited
    Real lo, hi;
    Shape lo_shape = Shape::Indeterminate, hi_shape = Shape::Indeterminate;
    int digits_achieved = 0;
    bool converged = false;
    bool endpoints_verified = false;
    int N_final = 0;
    Real E_excitation; // physical E_q
    Real E_total;      // E0 + physical E_q
};

// P'' + 2 W' P' + E_q P = 0 order by order. Degree of P is 2N + parity.
template <class T>
std::vector<T> prefactor_series(const std::vector<T>& a, Parity parity, const T& tau, int N, T& E_q) {
    int p = parity_offset(parity);
    int D = 2 * N + p;
    if (static_cast<int>(a.size()) - 1 < N)
        throw Error("invalid-spec", "ground series shorter than the prefactor order");
    std::vector<T> c(static_cast<std::size_t>(D) + 1, T(0));
    if (parity == Parity::Even) {
        c[0] = 1;
        if (D >= 2)
            c[2] = tau;
        E_q = -2 * tau;
    } else {
        c[1] = 1;
        if (D >= 3)
            c[3] = -tau;
        E_q = 6 * tau - 4 * a[1];
    }
    for (int n = p + 2; n + 2 <= D; n += 2) {
        T s = E_q * c[n];
        for (int m = 1; 2 * m <= n + 1; ++m) {
            int l = n - 2 * m + 2;
            if (l > 0)
                s += T(4 * m * l) * a[m] * c[l];
        }
        c[n + 2] = -s / T((n + 2) * (n + 1));
    }
    return c;
}

// Coefficients of x^n, n = 0..D-2, of P'' + 2 W' P' + E_q P.
template <class T>
std::vector<T> prefactor_residual(const std::vector<T>& a, const std::vector<T>& c, const T& E_q) {
    int D = static_cast<int>(c.size()) - 1;
    int A = static_cast<int>(a.size()) - 1;
    std::vector<T> r(static_cast<std::size_t>(std::max(D - 1, 0)), T(0));
    for (int n = 0; n + 2 <= D; ++n) {
        T s = T((n + 2) * (n + 1)) * c[n + 2] + E_q * c[n];
        for (int m = 1; m <= A && 2 * m <= n + 2; ++m) {
            int l = n - 2 * m + 2;
            if (l > 0)
                s += T(4 * m * l) * a[m] * c[l];
        }
        r[n] = s;
    }
    return r;
}

inline ExcitedState prefactor_coefficients(const SeriesSolution& ground, Parity parity, const Real& tau, int N,
                                           const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    ExcitedState st;
    st.parity = parity;
    st.tau = at_precision(tau);
    st.c = prefactor_series<Real>(ground.a, parity, st.tau, N, st.E_q);
    return st;
}

inline BorelSeries prefactor_borel_series(const ExcitedState& st, OddIndex convention = OddIndex::Actual) {
    int p = parity_offset(st.parity);
    BorelSeries b;
    for (std::size_t n = static_cast<std::size_t>(p); n < st.c.size(); n += 2)
        b.coeffs.push_back(st.c[n]);
    b.first = 0;
    b.offset = convention == OddIndex::Actual ? p : 0;
    b.pole_order = 0;
    return b;
}

inline ResummationCurve resum_prefactor(const ExcitedState& st, const Real& alpha, const CurveSettings& settings,
                                        const PrecisionContext& ctx, OddIndex convention = OddIndex::Actual) {
    BorelSeries b = prefactor_borel_series(st, convention);
    BorelKernel k(b.first, b.last(), b.offset, b.pole_order, alpha, ctx);
    return build_curve(b, k, settings);
}

struct ExcitedOptions {
    TuneOptions tune;
    OddIndex odd_index = OddIndex::Actual;
    ExcitedOptions() { tune.alpha_start_tenths = 6; }
};

namespace detail {

class PrefactorProbe {
public:
    PrefactorProbe(const TuneResult& ground, Parity parity, const ExcitedOptions& opt)
        : ground_(ground), parity_(parity), opt_(opt), st_(settings_for(opt.tune)) {}

    Shape operator()(const Real& tau, int N, int alpha_tenths) {
        PrecisionContext ctx = tuning_context(opt_.tune.target_digits, N);
        ExcitedState s = prefactor_coefficients(series(N, ctx), parity_, tau, N, ctx);
        BorelSeries b = prefactor_borel_series(s, opt_.odd_index);
        auto key = std::make_pair(N, alpha_tenths);
        auto it = kernels_.find(key);
        if (it == kernels_.end() || it->second.context().working_digits != ctx.working_digits)
            it = kernels_.insert_or_assign(key, BorelKernel(b.first, b.last(), b.offset, b.pole_order,
                                                            alpha_value(alpha_tenths), ctx)).first;
        return build_curve(b, it->second, st_).classification;
    }

    const SeriesSolution& series(int N, const PrecisionContext& ctx) {
        auto it = series_.find(N);
        if (it == series_.end() || it->second.first != ctx.working_digits)
            it = series_.insert_or_assign(N, std::make_pair(ctx.working_digits, tuned_series(ground_, std::max(N, ground_.M + 2), ctx))).first;
        return it->second.second;
    }

private:
    TuneResult ground_;
    Parity parity_;
    ExcitedOptions opt_;
    CurveSettings st_;
    std::map<std::pair<int, int>, BorelKernel> kernels_;
    std::map<int, std::pair<int, SeriesSolution>> series_;
};

} // namespace detail

inline std::pair<Real, Real> default_tau_range(Parity parity) {
    if (parity == Parity::Odd)
        return {Real(0), Real(5)};
    return {Real(-12), Real(-1) / 2};
}

// Every flip in the scan range, bisected; states come back ordered by tau.
inline std::vector<ExcitedState> tune_excited(const TuneResult& ground, Parity parity, const ExcitedOptions& opt_in) {
    ExcitedOptions opt = opt_in;
    if (ground.digits_achieved < opt.tune.target_digits)
        throw Error("invalid-spec", "the ground state must be tuned to at least the target digits");
    auto range = opt.tune.scan_range ? *opt.tune.scan_range : default_tau_range(parity);
    if (opt.tune.scale_floor <= 0)
        opt.tune.scale_floor = 1e-3 * std::abs(static_cast<double>(range.second - range.first));
    detail::PrefactorProbe pp(ground, parity, opt);
    Probe probe = [&pp](const Real& t, int N, int a) { return pp(t, N, a); };
    auto context_for = [&opt](int N) { return tuning_context(opt.tune.target_digits, N); };
    int N0 = std::min(opt.tune.n_start, opt.tune.n_cap);
    PrecisionContext ctx0 = context_for(N0);
    Real lo, hi;
    {
        PrecisionScope scope(ctx0);
        lo = at_precision(range.first);
        hi = at_precision(range.second);
    }
    int alpha = opt.tune.alpha_start_tenths > 0 ? opt.tune.alpha_start_tenths : 6;
    ScanResult scan = scan_for_flips(probe, lo, hi, opt.tune.scan_points, N0, alpha, opt.tune.alpha_floor_tenths);
    if (scan.flips.empty())
        throw Error("bracket-not-found", "no classifier flip in the tau range");

    std::vector<ExcitedState> out;
    for (const Flip& f : scan.flips) {
        Refinement ref = refine_flip(probe, f, opt.tune, N0, scan.alpha_tenths, context_for);
        PrecisionContext ctx = context_for(ref.N_final);
        ExcitedState st = prefactor_coefficients(pp.series(ref.N_final, ctx), parity, ref.parameter, ref.N_final, ctx);
        PrecisionScope scope(ctx);
        st.lo = ref.lo;
        st.hi = ref.hi;
        st.lo_shape = ref.lo_shape;
        st.hi_shape = ref.hi_shape;
        st.digits_achieved = ref.digits_achieved;
        st.converged = ref.converged;
        st.endpoints_verified = ref.endpoints_verified;
        st.N_final = ref.N_final;
        st.alpha_used = alpha_value(ref.alpha_tenths);
        Real c = at_precision(ground.c);
        st.E_excitation = st.E_q / (c * c);
        st.E_total = at_precision(ground.E) + st.E_excitation;
        out.push_back(std::move(st));
    }
    return out;
}

// Largest y with V_eff(y) = E in the rescaled coordinate; nodes of a bound
// state cannot lie beyond it.
inline double turning_point(const SeriesSolution& ground, const Real& E_q) {
    double rho = static_cast<double>(ground.rho_eff), g = static_cast<double>(ground.g_eff);
    double E = static_cast<double>(ground.E_eff + E_q);
    int M = ground.M;
    auto f = [&](double y) { return rho * y * y + g * std::pow(y, 2 * M) - E; };
    double ymin = rho < 0 ? std::pow(-rho / (M * g), 1.0 / (2 * M - 2)) : 0.0;
    if (f(ymin) > 0)
        return 0.0;
    double hi = std::max(1.0, 2 * ymin);
    while (f(hi) <= 0)
        hi *= 2;
    double lo = ymin;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Radius where the last retained term is 10^-10 of the leading one.
inline Real reliability_radius(const std::vector<Real>& c, int leading, double ratio = 1e-10) {
    int D = static_cast<int>(c.size()) - 1;
    while (D > leading && c[D] == 0)
        --D;
    if (D <= leading)
        return Real(-1); // polynomial; no limit
    return boost::multiprecision::pow(Real(ratio) * boost::multiprecision::abs(c[leading]) / boost::multiprecision::abs(c[D]),
                                      Real(1) / (D - leading));
}

inline Real evaluate_polynomial(const std::vector<Real>& c, const Real& y) {
    Real v = 0;
    for (std::size_t n = c.size(); n-- > 0;)
        v = v * y + c[n];
    return v;
}

// Sign changes of P on (0, r], doubled by symmetry, plus the origin for odd
// states. Inconclusive when r does not cover the classically allowed region
// or a sign change sits at the grid edge.
inline int count_nodes(const ExcitedState& st, const SeriesSolution& ground, const PrecisionContext& ctx, int grid = 2048) {
    PrecisionScope scope(ctx);
    int p = parity_offset(st.parity);
    Real r = reliability_radius(st.c, p);
    double yt = turning_point(ground, st.E_q);
    if (r < 0)
        r = Real(std::max(2 * yt, 1.0));
    if (r < Real(yt))
        throw Error("inconclusive-node-count", "reliability radius " + to_decimal(r, 4) +
                                                   " is inside the turning point " + std::to_string(yt));
    int changes = 0;
    int edge = std::max(1, grid / 100);
    Real prev = evaluate_polynomial(st.c, r / grid);
    for (int i = 2; i <= grid; ++i) {
        Real v = evaluate_polynomial(st.c, r * i / grid);
        if ((v > 0) != (prev > 0) && v != 0) {
            ++changes;
            if (i > grid - edge)
                throw Error("inconclusive-node-count", "sign change at the edge of the reliability radius");
        }
        prev = v;
    }
    return 2 * changes + p;
}

// Labels each state from its node count where that is conclusive, otherwise
// by the nearest oracle eigenvalue of the same parity.
inline void assign_levels(std::vector<ExcitedState>& states, const SeriesSolution& ground, const PrecisionContext& ctx,
                          const std::vector<Real>* oracle_levels = nullptr) {
    for (auto& st : states) {
        try {
            st.nodes = count_nodes(st, ground, ctx);
            st.q = st.nodes;
            st.label_source = "nodes";
        } catch (const Error& e) {
            if (e.signal() != "inconclusive-node-count")
                throw;
            st.nodes = -1;
            if (oracle_levels) {
                int best = -1;
                Real dist;
                for (std::size_t i = 0; i < oracle_levels->size(); ++i) {
                    if (static_cast<int>(i % 2) != parity_offset(st.parity))
                        continue;
                    Real d = boost::multiprecision::abs((*oracle_levels)[i] - st.E_total);
                    if (best < 0 || d < dist) {
                        best = static_cast<int>(i);
                        dist = d;
                    }
                }
                st.q = best;
                st.label_source = best >= 0 ? "oracle" : "";
            }
        }
    }
}

} // namespace anharmonic
