#include <anharmonic/oracle.hpp>
#include <anharmonic/wavefn.hpp>

#include <catch_amalgamated.hpp>

using namespace anharmonic;

namespace {

const char* kA3 = "0.019360437202459504192019975317212335964";

SeriesSolution ground_series(int N, const PrecisionContext& ctx) {
    ProblemSpec sp;
    sp.N = N;
    return ground_coefficients(sp, parse_real(kA3, ctx), ctx);
}

} // namespace

TEST_CASE("ground state is one at the origin, even and positive", "[wavefn]") {
    PrecisionContext ctx = tuning_context(20, 60);
    SeriesSolution s = ground_series(60, ctx);
    WavefunctionTable t = sample(s, nullptr, 201, ctx);
    REQUIRE(t.grid.size() == 201u);
    CHECK(t.grid[100] == 0);
    CHECK(t.psi[100] == 1);
    CHECK(t.reliability_radius > 0);
    CHECK(t.warning.empty());
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        CHECK(t.psi[i] > 0);
        CHECK(t.psi[i] == t.psi[t.grid.size() - 1 - i]);
        CHECK(t.grid[i] == -t.grid[t.grid.size() - 1 - i]);
        CHECK(boost::multiprecision::abs(t.grid[i]) <= t.reliability_radius);
    }
}

TEST_CASE("excited samples keep exact parity and the node count", "[wavefn][property]") {
    PrecisionContext ctx = tuning_context(20, 192);
    SeriesSolution s = ground_series(192, ctx);
    PrecisionScope scope(ctx);
    struct Case {
        Parity p;
        const char* tau;
        int nodes;
    };
    for (Case c : {Case{Parity::Odd, "0.1458432840772311496746", 1}, Case{Parity::Even, "-4.523456589660552926178", 2},
                   Case{Parity::Odd, "1.99546440689447280013780", 3}}) {
        ExcitedState st = prefactor_coefficients(s, c.p, parse_real(c.tau, ctx), 192, ctx);
        int nodes = count_nodes(st, s, ctx);
        CHECK(nodes == c.nodes);
        WavefunctionTable t = sample(s, &st, 400, ctx);
        CHECK(sign_changes(t.psi) == nodes);
        double sign = c.p == Parity::Odd ? -1 : 1;
        for (std::size_t i = 0; i < t.psi.size(); ++i)
            CHECK(t.psi[i] == sign * t.psi[t.psi.size() - 1 - i]);
    }
}

TEST_CASE("log of the ground state matches the oracle eigenvector", "[wavefn]") {
    PrecisionContext ctx = tuning_context(20, 60);
    SeriesSolution s = ground_series(60, ctx);
    OracleSpec os;
    os.levels = 2;
    OracleResult r = diagonalize(os, true);
    PrecisionScope scope(ctx);
    Real x = parse_real("0.2", ctx);
    Real series = log_psi0(s, x / s.c);
    Real oracle = boost::multiprecision::log(oracle_wavefunction(r.vectors[0], os.omega, x) /
                                             oracle_wavefunction(r.vectors[0], os.omega, Real(0)));
    CHECK(digits_of_agreement(series, oracle) >= 6);
}

TEST_CASE("a plot range beyond the reliability radius is flagged", "[wavefn]") {
    PrecisionContext ctx = tuning_context(20, 60);
    SeriesSolution s = ground_series(60, ctx);
    WavefunctionTable full = sample(s, nullptr, 11, ctx);
    WavefunctionTable wide = sample(s, nullptr, 11, ctx, Real(1000));
    CHECK(wide.warning.rfind("truncated-range", 0) == 0);
    CHECK(wide.reliability_radius == full.reliability_radius);
    WavefunctionTable narrow = sample(s, nullptr, 11, ctx, Real(1) / 2);
    CHECK(narrow.warning.empty());
    CHECK(narrow.grid.back() == Real(1) / 2);
}

TEST_CASE("terminating series samples a default range", "[wavefn]") {
    PrecisionContext ctx(20, 40);
    ProblemSpec sp;
    sp.mode = Mode::Direct;
    sp.M = 3;
    sp.rho = -3;
    sp.N = 10;
    SeriesSolution s = ground_coefficients(sp, Real(0), ctx);
    WavefunctionTable t = sample(s, nullptr, 5, ctx);
    CHECK(t.grid.back() == 3);
    PrecisionScope scope(ctx);
    CHECK(digits_of_agreement(t.psi.back(), boost::multiprecision::exp(Real(-81) / 4)) >= 30);
}
