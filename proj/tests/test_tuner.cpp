#include <anharmonic/tuner.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace anharmonic;

namespace {

template <class F>
std::string signal_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.signal();
    }
    return "";
}

// Labels flip at `root`; within 10^(-resolution N) of it the probe sees Flat,
// and below order `honest` the apparent root is displaced by `shift`.
struct Synthetic {
    Real root;
    double resolution = 0.2;
    Shape below = Shape::Decreasing, above = Shape::Increasing;
    int honest = 0;
    Real shift = 0;
    int calls = 0;

    Shape operator()(const Real& x, int N, int) {
        ++calls;
        Real r = N < honest ? root + shift : root;
        Real zone = pow10(-static_cast<int>(resolution * N));
        if (boost::multiprecision::abs(x - r) < zone)
            return Shape::Flat;
        return x < r ? below : above;
    }
};

TuneOptions small_options(int digits, int cap) {
    TuneOptions o;
    o.target_digits = digits;
    o.n_cap = cap;
    o.scale_floor = 1e-3;
    return o;
}

void check_bracket(const Refinement& r, Synthetic& s) {
    CHECK(r.lo < r.hi);
    CHECK(s(r.lo, r.N_final, r.alpha_tenths) == r.lo_shape);
    CHECK(s(r.hi, r.N_final, r.alpha_tenths) == r.hi_shape);
    CHECK(r.endpoints_verified);
    CHECK(r.lo <= s.root);
    CHECK(s.root <= r.hi);
    CHECK(r.digits_achieved == relative_digits(r.lo, r.hi, Real(1e-3)));
}

} // namespace

TEST_CASE("relative digits of a bracket") {
    PrecisionContext ctx(30, 60);
    PrecisionScope scope(ctx);
    CHECK(relative_digits(parse_real("1.0", ctx), parse_real("1.01", ctx)) == 2);
    CHECK(relative_digits(parse_real("0.0193604", ctx), parse_real("0.0193605", ctx)) == 5);
    CHECK(relative_digits(Real(-1) / 1000000, Real(1) / 1000000, Real(1) / 1000) == 2);
}

TEST_CASE("tuning precision keeps the guard and grows with order") {
    for (int N : {24, 100, 400}) {
        PrecisionContext c = tuning_context(30, N);
        CHECK(c.working_digits >= c.decimal_digits + kMinGuardDigits);
        CHECK(c.decimal_digits >= 30);
    }
    CHECK(tuning_context(30, 400).working_digits > tuning_context(30, 100).working_digits);
}

TEST_CASE("bracket invariants on random roots", "[tuner][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    auto ctx_for = [](int N) { return tuning_context(14, N); };
    for (int trial = 0; trial < 20; ++trial) {
        PrecisionScope scope(ctx_for(100));
        Synthetic s;
        s.root = Real(u(rng));
        if (trial % 2) {
            s.below = Shape::Increasing;
            s.above = Shape::Decreasing;
        }
        Probe p = std::ref(s);
        ScanResult scan = scan_for_flips(p, Real(0), Real(1), 64, 24, 10, 3);
        REQUIRE(scan.flips.size() == 1);
        Refinement r = refine_flip(p, scan.flips[0], small_options(14, 100), 24, scan.alpha_tenths, ctx_for);
        CHECK(r.converged);
        CHECK(r.digits_achieved >= 14);
        CHECK(r.N_final > 24);
        check_bracket(r, s);
    }
}

TEST_CASE("escalation re-verifies endpoints a low order mislabelled", "[tuner][property]") {
    auto ctx_for = [](int N) { return tuning_context(14, N); };
    PrecisionScope scope(ctx_for(100));
    Synthetic s;
    s.root = parse_real("0.4123456789012345678", ctx_for(100));
    s.honest = 48;
    s.shift = parse_real("3e-4", ctx_for(100));
    Probe p = std::ref(s);
    ScanResult scan = scan_for_flips(p, Real(0), Real(1), 64, 24, 10, 3);
    REQUIRE(scan.flips.size() == 1);
    Refinement r = refine_flip(p, scan.flips[0], small_options(14, 100), 24, scan.alpha_tenths, ctx_for);
    CHECK(r.converged);
    check_bracket(r, s);
}

TEST_CASE("a flat zone at the order cap stops short of the target", "[tuner][property]") {
    auto ctx_for = [](int N) { return tuning_context(20, N); };
    PrecisionScope scope(ctx_for(40));
    Synthetic s;
    s.root = parse_real("0.3", ctx_for(40));
    Probe p = std::ref(s);
    ScanResult scan = scan_for_flips(p, Real(0), Real(1), 64, 24, 10, 3);
    Refinement r = refine_flip(p, scan.flips[0], small_options(20, 40), 24, scan.alpha_tenths, ctx_for);
    CHECK_FALSE(r.converged);
    CHECK(r.N_final == 40);
    CHECK(r.digits_achieved >= 7);
    CHECK(r.digits_achieved < 20);
    check_bracket(r, s);
}

TEST_CASE("oscillation lowers alpha until it clears") {
    Probe p = [](const Real& x, int, int a) {
        if (a > 6)
            return Shape::Oscillatory;
        return x < Real(0.5) ? Shape::Decreasing : Shape::Increasing;
    };
    ScanResult scan = scan_for_flips(p, Real(0), Real(1), 16, 24, 10, 3);
    CHECK(scan.alpha_tenths == 6);
    CHECK(scan.flips.size() == 1);
    Probe stuck = [](const Real&, int, int) { return Shape::Oscillatory; };
    CHECK(signal_of([&] { scan_for_flips(stuck, Real(0), Real(1), 16, 24, 10, 3); }) == "alpha-exhausted");
}

TEST_CASE("alpha start narrows with M") {
    CHECK(default_alpha_tenths(2) == 10);
    CHECK(default_alpha_tenths(3) == 8);
    CHECK(default_alpha_tenths(4) == 6);
    CHECK(default_alpha_tenths(6) == 4);
    CHECK(default_alpha_tenths(12) == 3);
}

TEST_CASE("ground state to twelve digits", "[tuner]") {
    ProblemSpec sp;
    TuneOptions o;
    o.target_digits = 12;
    TuneResult t = tune_ground(sp, o);
    CHECK(t.converged);
    CHECK(t.endpoints_verified);
    CHECK(t.parameter_name == "a3");
    CHECK(leading_digits(t.parameter, 12) == "193604372024");
    CHECK(leading_digits(t.E, 11) == "10603620904");
    CHECK(t.lo <= t.parameter);
    CHECK(t.parameter <= t.hi);
    CHECK(boost::multiprecision::abs(t.rho) < pow10(-30));
    PrecisionContext c = tuning_context(12, t.N_final);
    SeriesSolution s = tuned_series(t, t.N_final, c);
    CHECK(s.a[3] == t.parameter);
}

TEST_CASE("scan tolerates a range with no real scaling", "[tuner]") {
    PrecisionContext ctx(20, 40);
    ProblemSpec sp;
    TuneOptions o;
    o.target_digits = 8;
    o.scan_range = std::make_pair(parse_real("-0.05", ctx), parse_real("0.1", ctx));
    TuneResult t = tune_ground(sp, o);
    CHECK(leading_digits(t.parameter, 8) == "19360437");
}

TEST_CASE("quasi-exactly-solvable energy is zero", "[tuner]") {
    ProblemSpec sp;
    sp.mode = Mode::Direct;
    sp.M = 3;
    sp.rho = -3;
    TuneOptions o;
    o.target_digits = 12;
    TuneResult t = tune_ground(sp, o);
    CHECK(t.parameter_name == "E");
    CHECK(boost::multiprecision::abs(t.E) < pow10(-12));
}

TEST_CASE("a range without a flip reports it", "[tuner]") {
    PrecisionContext ctx(20, 40);
    ProblemSpec sp;
    TuneOptions o;
    o.target_digits = 8;
    o.scan_range = std::make_pair(parse_real("0.03", ctx), parse_real("0.1", ctx));
    CHECK(signal_of([&] { tune_ground(sp, o); }) == "bracket-not-found");
}

TEST_CASE("sweep keeps going past failing rows", "[tuner]") {
    PrecisionContext ctx(20, 40);
    ProblemSpec sp;
    TuneOptions o;
    o.target_digits = 8;
    o.scan_range = std::make_pair(parse_real("0.0", ctx), parse_real("0.05", ctx));
    auto rows = sweep(parse_real("-0.1875", ctx), parse_real("-0.18", ctx), 2, sp, o);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        REQUIRE(r.result);
        CHECK(r.result->converged);
    }
    CHECK(leading_digits(rows[0].result->parameter, 8) == "19360437");
}
