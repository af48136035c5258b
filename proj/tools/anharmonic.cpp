#include <anharmonic/excited.hpp>
#include <anharmonic/io.hpp>
#include <anharmonic/oracle.hpp>
#include <anharmonic/resummation.hpp>
#include <anharmonic/series.hpp>
#include <anharmonic/tuner.hpp>
#include <anharmonic/wavefn.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace anharmonic;

namespace {

// Every numeric input stays a string until it is parsed at working precision.
struct RunConfig {
    std::string subcommand;
    std::string mode = "scaled";
    int M = 2;
    std::string g = "1";
    std::string k = "4";
    std::string a2 = "-3/16";
    std::optional<std::string> parameter; // a_{M+1} (scaled) or E (direct) for curve
    std::string rho = "0";
    std::string target = "-1";
    std::optional<int> N;
    int N_cap = 400;
    int digits = 16;
    std::optional<std::string> alpha;
    std::string alpha_floor = "0.3";
    std::string emit = "json";
    std::string output;
    std::string cache;
    std::string parity = "both";
    std::optional<std::string> range_lo, range_hi;
    std::string a2_to;
    int steps = 11;
    int levels = 10;
    int basis = 200;
    std::string omega = "1";
    int grid = 201;
    int q = 0;
    std::optional<std::string> plot_range;
};

class CliError : public Error {
public:
    using Error::Error;
};

int tenths_of(const std::string& text, const char* what) {
    double v = 0;
    try {
        std::size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size())
            throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw CliError("invalid-config", std::string(what) + " must be a number, got '" + text + "'");
    }
    return static_cast<int>(std::lround(v * 10));
}

void validate(const RunConfig& c) {
    if (c.digits < 4)
        throw CliError("invalid-config", "digits must be at least 4");
    if (c.N_cap < 24)
        throw CliError("invalid-config", "N-cap must be at least 24");
    int af = tenths_of(c.alpha_floor, "alpha-floor");
    if (af < 3 || af > 10)
        throw CliError("invalid-config", "alpha-floor must lie in [0.3, 1]");
    if (c.mode != "scaled" && c.mode != "direct")
        throw CliError("invalid-config", "mode must be scaled or direct");
    if (c.emit != "json" && c.emit != "csv")
        throw CliError("invalid-config", "emit must be json or csv");
    if (c.parity != "odd" && c.parity != "even" && c.parity != "both")
        throw CliError("invalid-config", "parity must be odd, even or both");
    if (c.N && *c.N < 1)
        throw CliError("invalid-config", "N must be positive");
    if (c.grid < 2)
        throw CliError("invalid-config", "grid must be at least 2");
    if (c.steps < 1)
        throw CliError("invalid-config", "steps must be positive");
    if (c.q < 0)
        throw CliError("invalid-config", "q must be non-negative");
}

int parse_k(const std::string& s) {
    try {
        std::size_t used = 0;
        int k = std::stoi(s, &used);
        if (used == s.size())
            return k;
    } catch (const std::exception&) {
    }
    throw CliError("invalid-number", "k must be an integer, got '" + s + "'");
}

struct Session {
    RunConfig cfg;
    PrecisionContext ctx; // parsing precision for inputs

    explicit Session(RunConfig c) : cfg(std::move(c)), ctx(tuning_context(cfg.digits, cfg.N_cap)) {}

    Real num(const std::string& s) const { return parse_real(s, ctx); }

    ProblemSpec problem() const {
        ProblemSpec sp;
        sp.M = cfg.M;
        sp.mode = cfg.mode == "scaled" ? Mode::Scaled : Mode::Direct;
        PrecisionScope scope(ctx);
        sp.g = num(cfg.g);
        sp.k = parse_k(cfg.k);
        sp.a2 = num(cfg.a2);
        sp.rho = num(cfg.rho);
        if (cfg.N)
            sp.N = *cfg.N;
        return sp;
    }

    TuneOptions tune_options(int digits) const {
        TuneOptions o;
        o.target_digits = digits;
        o.n_cap = cfg.N_cap;
        o.n_start = std::min(cfg.N.value_or(24), cfg.N_cap);
        o.alpha_floor_tenths = tenths_of(cfg.alpha_floor, "alpha-floor");
        if (cfg.alpha)
            o.alpha_start_tenths = tenths_of(*cfg.alpha, "alpha");
        if (cfg.range_lo && cfg.range_hi) {
            PrecisionScope scope(ctx);
            o.scan_range = std::make_pair(num(*cfg.range_lo), num(*cfg.range_hi));
        }
        return o;
    }

    std::string ground_key(const ProblemSpec& sp, const TuneOptions& o) const {
        std::ostringstream k;
        k << "ground-" << to_string(sp.mode) << "-M" << sp.M << "-g" << to_exact_decimal(sp.g);
        if (sp.mode == Mode::Scaled)
            k << "-k" << sp.k << "-a2" << to_exact_decimal(sp.a2);
        else
            k << "-rho" << to_exact_decimal(sp.rho);
        k << "-d" << o.target_digits << "-cap" << o.n_cap << "-n" << o.n_start << "-alpha" << o.alpha_start_tenths
          << "-floor" << o.alpha_floor_tenths;
        if (o.scan_range)
            k << "-scan" << to_exact_decimal(o.scan_range->first) << "_" << to_exact_decimal(o.scan_range->second);
        return k.str();
    }

    // Tunes, stores and reloads, so cold and cached runs format identical values.
    template <class Tune>
    TuneResult cached(const std::string& key, Tune tune) const {
        if (cfg.cache.empty())
            return tune();
        ResultCache cache(cfg.cache);
        if (auto hit = cache.load(key))
            return *hit;
        TuneResult t = tune();
        PrecisionContext c = tuning_context(t.target_digits, t.N_final);
        SeriesSolution s = tuned_series(t, t.N_final, c);
        cache.store(key, t, &s);
        auto back = cache.load(key);
        if (!back)
            throw Error("io-error", "cache entry did not read back");
        return *back;
    }

    TuneResult ground(int digits, std::optional<TuneOptions> opt = std::nullopt) const {
        ProblemSpec sp = problem();
        TuneOptions o = opt ? *opt : tune_options(digits);
        o.target_digits = digits;
        return cached(ground_key(sp, o), [&] { return tune_ground(sp, o); });
    }
};

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(cfg.output);
    if (!out)
        throw Error("io-error", "cannot open output file " + cfg.output);
    out << text;
}

std::string run_ground(const Session& s) {
    TuneResult t = s.ground(s.cfg.digits);
    if (s.cfg.emit == "csv") {
        std::ostringstream o;
        write_coefficients_csv(o, tuned_series(t, t.N_final, tuning_context(t.target_digits, t.N_final)), s.cfg.digits);
        return o.str();
    }
    return to_json(t, s.cfg.digits).dump(2) + "\n";
}

std::string run_rho(const Session& s) {
    ProblemSpec base = s.problem();
    base.mode = Mode::Scaled;
    TuneOptions o = s.tune_options(s.cfg.digits);
    Real target;
    {
        PrecisionScope scope(s.ctx);
        target = s.num(s.cfg.target);
    }
    std::string key = "rho-M" + std::to_string(base.M) + "-k" + std::to_string(base.k) + "-target" +
                      to_exact_decimal(target) + "-d" + std::to_string(o.target_digits) + "-cap" +
                      std::to_string(o.n_cap) + "-alpha" + std::to_string(o.alpha_start_tenths) + "-floor" +
                      std::to_string(o.alpha_floor_tenths);
    TuneResult t = s.cached(key, [&] { return tune_to_rho(target, base, o); });
    return to_json(t, s.cfg.digits).dump(2) + "\n";
}

std::vector<Real> oracle_levels(const Session& s, const TuneResult& g, int levels) {
    OracleSpec os;
    os.M = g.M;
    os.g = g.mode == Mode::Scaled ? Real(1) : g.g;
    os.rho = g.rho;
    os.levels = levels;
    os.basis_size = std::max(s.cfg.basis, 4 * levels + 8);
    os.omega = s.num(s.cfg.omega);
    return diagonalize(os).eigenvalues;
}

struct ExcitedRun {
    TuneResult ground;
    std::vector<ExcitedState> states;
};

// The ground state carries five extra digits so it never limits the excitations.
ExcitedRun excited_states(const Session& s, const std::string& parity) {
    ExcitedRun run;
    TuneOptions go = s.tune_options(s.cfg.digits + 5);
    go.scan_range.reset();
    if (s.cfg.alpha)
        go.alpha_start_tenths = 0;
    run.ground = s.ground(s.cfg.digits + 5, go);
    std::vector<Real> levels = oracle_levels(s, run.ground, s.cfg.levels);
    for (Parity p : {Parity::Odd, Parity::Even}) {
        if (parity != "both" && parity != to_string(p))
            continue;
        ExcitedOptions eo;
        eo.tune = s.tune_options(s.cfg.digits);
        if (!s.cfg.alpha)
            eo.tune.alpha_start_tenths = 6;
        auto states = tune_excited(run.ground, p, eo);
        PrecisionContext c = tuning_context(s.cfg.digits + 5, run.ground.N_final);
        SeriesSolution gs = tuned_series(run.ground, run.ground.N_final, c);
        assign_levels(states, gs, c, &levels);
        for (auto& st : states)
            run.states.push_back(std::move(st));
    }
    std::stable_sort(run.states.begin(), run.states.end(),
                     [](const ExcitedState& a, const ExcitedState& b) { return a.E_total < b.E_total; });
    return run;
}

std::string run_excited(const Session& s) {
    ExcitedRun run = excited_states(s, s.cfg.parity);
    json j;
    j["ground"] = to_json(run.ground, s.cfg.digits);
    json rows = json::array();
    for (const auto& st : run.states)
        rows.push_back(to_json(st, s.cfg.digits));
    j["states"] = rows;
    return j.dump(2) + "\n";
}

std::string run_sweep(const Session& s) {
    ProblemSpec base = s.problem();
    if (s.cfg.a2_to.empty())
        throw CliError("invalid-config", "sweep needs --a2-to");
    TuneOptions o = s.tune_options(s.cfg.digits);
    Real lo, hi;
    {
        PrecisionScope scope(s.ctx);
        lo = s.num(s.cfg.a2);
        hi = s.num(s.cfg.a2_to);
    }
    auto rows = sweep(lo, hi, s.cfg.steps, base, o);
    if (s.cfg.emit == "csv") {
        std::ostringstream out;
        write_sweep_csv(out, rows, s.cfg.digits);
        return out.str();
    }
    json arr = json::array();
    for (const auto& r : rows) {
        json row;
        row["a2"] = to_decimal(r.a2, s.cfg.digits);
        row["result"] = r.result ? to_json(*r.result, s.cfg.digits) : json(nullptr);
        row["error"] = r.error.empty() ? json(nullptr) : json(r.error);
        arr.push_back(row);
    }
    return arr.dump(2) + "\n";
}

std::string run_curve(const Session& s) {
    ProblemSpec sp = s.problem();
    if (!s.cfg.parameter)
        throw CliError("invalid-config", "curve needs the free parameter (--a3 in scaled mode, --E in direct mode)");
    int N = s.cfg.N.value_or(24);
    sp.N = N;
    PrecisionContext c = tuning_context(s.cfg.digits, N);
    PrecisionScope scope(c);
    Real p = parse_real(*s.cfg.parameter, c);
    Real alpha = s.cfg.alpha ? parse_real(*s.cfg.alpha, c) : alpha_value(default_alpha_tenths(sp.M));
    SeriesSolution sol = ground_coefficients(sp, p, c);
    TuneOptions o = s.tune_options(s.cfg.digits);
    ResummationCurve curve = ground_curve(sol, alpha, settings_for(o), c);
    if (s.cfg.emit == "csv") {
        std::ostringstream out;
        write_curve_csv(out, curve, s.cfg.digits);
        return out.str();
    }
    json j;
    j["mode"] = to_string(sp.mode);
    j["M"] = sp.M;
    j["parameter_name"] = free_parameter_name(sp);
    j["parameter"] = to_decimal(p, s.cfg.digits);
    j["N"] = N;
    j["alpha"] = to_decimal(alpha, 4);
    j["classification"] = to_string(curve.classification);
    j["window_max"] = to_decimal(curve.window_max, 8);
    j["reference"] = curve.reference ? json(to_decimal(*curve.reference, 12)) : json(nullptr);
    j["E"] = to_decimal(sol.E, s.cfg.digits);
    j["rho"] = to_decimal(sol.rho, s.cfg.digits);
    j["g_eff"] = to_decimal(sol.g_eff, s.cfg.digits);
    return j.dump(2) + "\n";
}

std::string run_oracle(const Session& s) {
    OracleSpec os;
    os.M = s.cfg.M;
    os.g = s.num(s.cfg.g);
    os.rho = s.num(s.cfg.rho);
    os.basis_size = s.cfg.basis;
    os.levels = s.cfg.levels;
    os.omega = s.num(s.cfg.omega);
    OracleResult r = diagonalize(os);
    json j;
    j["M"] = os.M;
    j["g"] = to_decimal(os.g, s.cfg.digits);
    j["rho"] = to_decimal(os.rho, s.cfg.digits);
    j["basis"] = os.basis_size;
    j["omega"] = to_decimal(os.omega, s.cfg.digits);
    j["digits"] = os.digits;
    json ev = json::array();
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        ev.push_back({{"n", i}, {"parity", r.parity[i] ? "odd" : "even"}, {"E", to_decimal(r.eigenvalues[i], s.cfg.digits)}});
    j["levels"] = ev;
    return j.dump(2) + "\n";
}

std::string run_wavefn(const Session& s) {
    std::optional<Real> range;
    if (s.cfg.plot_range)
        range = s.num(*s.cfg.plot_range);
    WavefunctionTable t;
    if (s.cfg.q == 0) {
        TuneResult g = s.ground(s.cfg.digits);
        PrecisionContext c = tuning_context(g.target_digits, g.N_final);
        t = sample(tuned_series(g, g.N_final, c), nullptr, s.cfg.grid, c, range);
    } else {
        ExcitedRun run = excited_states(s, s.cfg.q % 2 ? "odd" : "even");
        const ExcitedState* st = nullptr;
        for (const auto& x : run.states)
            if (x.q == s.cfg.q)
                st = &x;
        if (!st)
            throw Error("bracket-not-found", "no tuned state with q = " + std::to_string(s.cfg.q) + "; widen --tau-from/--tau-to");
        PrecisionContext c = tuning_context(s.cfg.digits + 5, run.ground.N_final);
        t = sample(tuned_series(run.ground, run.ground.N_final, c), st, s.cfg.grid, c, range);
    }
    std::ostringstream out;
    write_wavefunction_csv(out, t, s.cfg.digits);
    return out.str();
}

std::string error_json(const std::string& signal, const std::string& message) {
    json j;
    j["error"] = signal;
    j["message"] = message;
    return j.dump() + "\n";
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"High-precision anharmonic oscillator eigenvalues by tuned Borel resummation"};
    app.set_config("--config", "", "key=value file; explicit flags win");
    app.require_subcommand(1, 1);

    app.add_option("--mode", cfg.mode, "scaled or direct");
    app.add_option("--M", cfg.M, "potential exponent 2M");
    app.add_option("--g", cfg.g, "coupling");
    app.add_option("--k", cfg.k, "scaled-mode ratio a1/a2");
    app.add_option("--a2", cfg.a2, "scaled-mode a2 (sweep start)");
    app.add_option("--a3,--parameter", cfg.parameter, "free series parameter for curve (scaled)");
    app.add_option("--E", cfg.parameter, "trial energy for curve (direct)");
    app.add_option("--rho", cfg.rho, "harmonic coefficient (direct mode, oracle)");
    app.add_option("--target", cfg.target, "rho target for the rho subcommand");
    app.add_option("--N", cfg.N, "starting order (curve: the order)");
    app.add_option("--N-cap", cfg.N_cap, "maximum order");
    app.add_option("--digits", cfg.digits, "target significant digits");
    app.add_option("--alpha", cfg.alpha, "Borel-Leroy alpha (start of the schedule when tuning)");
    app.add_option("--alpha-floor", cfg.alpha_floor, "lowest alpha the schedule may reach");
    app.add_option("--emit", cfg.emit, "json or csv");
    app.add_option("--output", cfg.output, "write to this file instead of stdout");
    app.add_option("--cache", cfg.cache, "cache directory for tuned solutions");
    app.add_option("--parity", cfg.parity, "odd, even or both");
    app.add_option("--scan-from,--tau-from", cfg.range_lo, "scan range start");
    app.add_option("--scan-to,--tau-to", cfg.range_hi, "scan range end");
    app.add_option("--a2-to", cfg.a2_to, "sweep end");
    app.add_option("--steps", cfg.steps, "sweep points");
    app.add_option("--levels", cfg.levels, "oracle levels");
    app.add_option("--basis", cfg.basis, "oracle basis size");
    app.add_option("--omega", cfg.omega, "oracle basis frequency");
    app.add_option("--grid", cfg.grid, "wavefunction grid points");
    app.add_option("--q", cfg.q, "wavefunction level");
    app.add_option("--range", cfg.plot_range, "wavefunction half-width in x");

    for (const char* name : {"ground", "rho", "excited", "sweep", "curve", "oracle", "wavefn"})
        app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << error_json("invalid-config", e.what());
        return 2;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    try {
        validate(cfg);
        Session s(cfg);
        std::string out;
        if (cfg.subcommand == "ground")
            out = run_ground(s);
        else if (cfg.subcommand == "rho")
            out = run_rho(s);
        else if (cfg.subcommand == "excited")
            out = run_excited(s);
        else if (cfg.subcommand == "sweep")
            out = run_sweep(s);
        else if (cfg.subcommand == "curve")
            out = run_curve(s);
        else if (cfg.subcommand == "oracle")
            out = run_oracle(s);
        else
            out = run_wavefn(s);
        emit(cfg, out);
    } catch (const CliError& e) {
        std::cout << error_json(e.signal(), e.what());
        return 2;
    } catch (const Error& e) {
        std::cout << error_json(e.signal(), e.what());
        return e.signal() == "invalid-number" || e.signal() == "invalid-config" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cout << error_json("internal-error", e.what());
        return 1;
    }
    return 0;
}
