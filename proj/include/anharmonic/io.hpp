#pragma once

#include "excited.hpp"
#include "numerics.hpp"
#include "resummation.hpp"
#include "series.hpp"
#include "tuner.hpp"
#include "wavefn.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace anharmonic {

using json = nlohmann::ordered_json;

inline constexpr const char* kCacheSchema = "anharmonic-cache/1";

inline Shape shape_from_string(const std::string& s) {
    for (Shape x : {Shape::Decreasing, Shape::Flat, Shape::Increasing, Shape::Oscillatory, Shape::Indeterminate})
        if (s == to_string(x))
            return x;
    throw Error("io-error", "unknown classification '" + s + "'");
}

// Output form of a tuning result; every number is a decimal string rounded
// to `digits` significant digits.
inline json to_json(const TuneResult& t, int digits) {
    auto d = [digits](const Real& x) { return to_decimal(x, digits); };
    json j;
    j["mode"] = to_string(t.mode);
    j["M"] = t.M;
    j["g"] = d(t.g);
    if (t.mode == Mode::Scaled) {
        j["k"] = t.k;
        j["a2"] = d(t.a2);
    } else {
        j["k"] = nullptr;
        j["a2"] = nullptr;
    }
    j["parameter_name"] = t.parameter_name;
    j["parameter"] = d(t.parameter);
    if (t.inner_parameter)
        j["a" + std::to_string(t.M + 1)] = d(*t.inner_parameter);
    j["E"] = d(t.E);
    j["rho"] = d(t.rho);
    j["g_eff"] = d(t.g_eff);
    j["digits"] = t.digits_achieved;
    j["target_digits"] = t.target_digits;
    j["converged"] = t.converged;
    j["N"] = t.N_final;
    j["alpha"] = to_decimal(t.alpha_used, 2);
    j["plateau"] = to_decimal(t.plateau, 12);
    j["plateau_reference"] = to_decimal(t.plateau_reference, 12);
    j["bracket"] = {d(t.lo), d(t.hi)};
    j["orientation"] = {to_string(t.lo_shape), to_string(t.hi_shape)};
    j["endpoints_verified"] = t.endpoints_verified;
    if (t.rho_residual)
        j["rho_residual"] = to_decimal(*t.rho_residual, 4);
    return j;
}

// Lossless form for the cache: exact decimals plus each value's precision.
inline json exact(const Real& x) { return {to_exact_decimal(x), static_cast<int>(x.precision())}; }

inline Real from_exact(const json& j) {
    unsigned p = j.at(1).get<unsigned>();
    PrecisionScope scope(PrecisionContext(1, static_cast<int>(std::max(p, 21u))));
    return Real(j.at(0).get<std::string>());
}

inline json cache_document(const TuneResult& t, const std::string& key, const SeriesSolution* series = nullptr) {
    json j;
    j["schema"] = kCacheSchema;
    j["key"] = key;
    j["mode"] = to_string(t.mode);
    j["M"] = t.M;
    j["g"] = exact(t.g);
    j["k"] = t.k;
    j["a2"] = exact(t.a2);
    j["rho_input"] = exact(t.rho_input);
    j["parameter_name"] = t.parameter_name;
    j["parameter"] = exact(t.parameter);
    j["lo"] = exact(t.lo);
    j["hi"] = exact(t.hi);
    j["lo_shape"] = to_string(t.lo_shape);
    j["hi_shape"] = to_string(t.hi_shape);
    j["target_digits"] = t.target_digits;
    j["digits_achieved"] = t.digits_achieved;
    j["converged"] = t.converged;
    j["endpoints_verified"] = t.endpoints_verified;
    j["E"] = exact(t.E);
    j["rho"] = exact(t.rho);
    j["g_eff"] = exact(t.g_eff);
    j["c"] = exact(t.c);
    j["N_final"] = t.N_final;
    j["alpha_used"] = exact(t.alpha_used);
    j["plateau"] = exact(t.plateau);
    j["plateau_reference"] = exact(t.plateau_reference);
    j["plateau_flat"] = t.plateau_flat;
    j["steps"] = t.steps;
    j["inner_parameter"] = t.inner_parameter ? exact(*t.inner_parameter) : json(nullptr);
    j["rho_residual"] = t.rho_residual ? exact(*t.rho_residual) : json(nullptr);
    if (series) {
        json a = json::array();
        for (int n = 1; n <= series->order(); ++n)
            a.push_back(to_exact_decimal(series->a[n]));
        j["coefficients"] = a;
    }
    return j;
}

inline TuneResult tune_result_from_cache(const json& j) {
    if (j.value("schema", "") != kCacheSchema)
        throw Error("io-error", "cache document has an unknown schema");
    TuneResult t;
    t.mode = j.at("mode") == "scaled" ? Mode::Scaled : Mode::Direct;
    t.M = j.at("M");
    t.g = from_exact(j.at("g"));
    t.k = j.at("k");
    t.a2 = from_exact(j.at("a2"));
    t.rho_input = from_exact(j.at("rho_input"));
    t.parameter_name = j.at("parameter_name");
    t.parameter = from_exact(j.at("parameter"));
    t.lo = from_exact(j.at("lo"));
    t.hi = from_exact(j.at("hi"));
    t.lo_shape = shape_from_string(j.at("lo_shape"));
    t.hi_shape = shape_from_string(j.at("hi_shape"));
    t.target_digits = j.at("target_digits");
    t.digits_achieved = j.at("digits_achieved");
    t.converged = j.at("converged");
    t.endpoints_verified = j.at("endpoints_verified");
    t.E = from_exact(j.at("E"));
    t.rho = from_exact(j.at("rho"));
    t.g_eff = from_exact(j.at("g_eff"));
    t.c = from_exact(j.at("c"));
    t.N_final = j.at("N_final");
    t.alpha_used = from_exact(j.at("alpha_used"));
    t.plateau = from_exact(j.at("plateau"));
    t.plateau_reference = from_exact(j.at("plateau_reference"));
    t.plateau_flat = j.at("plateau_flat");
    t.steps = j.at("steps");
    if (!j.at("inner_parameter").is_null())
        t.inner_parameter = from_exact(j.at("inner_parameter"));
    if (!j.at("rho_residual").is_null())
        t.rho_residual = from_exact(j.at("rho_residual"));
    return t;
}

// One JSON file per tuned solution inside the cache directory.
class ResultCache {
public:
    explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    // Keys hold exact decimals and get long; files are named by a stable
    // 64-bit FNV-1a hash and the key inside the document is checked on load.
    std::filesystem::path file_for(const std::string& key) const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : key) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        char name[32];
        std::snprintf(name, sizeof name, "%016llx.json", static_cast<unsigned long long>(h));
        return dir_ / name;
    }

    std::optional<TuneResult> load(const std::string& key) const {
        auto f = file_for(key);
        if (!std::filesystem::exists(f))
            return std::nullopt;
        std::ifstream in(f);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || j.value("schema", "") != kCacheSchema || j.value("key", "") != key)
            return std::nullopt;
        return tune_result_from_cache(j);
    }

    void store(const std::string& key, const TuneResult& t, const SeriesSolution* series = nullptr) const {
        std::filesystem::create_directories(dir_);
        auto f = file_for(key);
        auto tmp = f;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            if (!out)
                throw Error("io-error", "cannot write cache file " + tmp.string());
            out << cache_document(t, key, series).dump(1) << "\n";
        }
        std::filesystem::rename(tmp, f);
    }

private:
    std::filesystem::path dir_;
};

inline json to_json(const ExcitedState& s, int digits) {
    auto d = [digits](const Real& x) { return to_decimal(x, digits); };
    json j;
    j["parity"] = to_string(s.parity);
    j["tau"] = d(s.tau);
    j["E_q"] = d(s.E_excitation);
    j["E_total"] = d(s.E_total);
    j["nodes"] = s.nodes >= 0 ? json(s.nodes) : json(nullptr);
    j["q"] = s.q >= 0 ? json(s.q) : json(nullptr);
    j["label_source"] = s.label_source.empty() ? json(nullptr) : json(s.label_source);
    j["digits"] = s.digits_achieved;
    j["converged"] = s.converged;
    j["N"] = s.N_final;
    j["alpha"] = to_decimal(s.alpha_used, 2);
    j["bracket"] = {d(s.lo), d(s.hi)};
    j["orientation"] = {to_string(s.lo_shape), to_string(s.hi_shape)};
    j["endpoints_verified"] = s.endpoints_verified;
    return j;
}

inline void write_coefficients_csv(std::ostream& out, const SeriesSolution& s, int digits) {
    out << "n,a_n\n";
    for (int n = 1; n <= s.order(); ++n)
        out << n << "," << to_decimal(s.a[n], digits) << "\n";
}

inline void write_curve_csv(std::ostream& out, const ResummationCurve& c, int digits) {
    out << "# classification=" << to_string(c.classification) << " window_max=" << to_decimal(c.window_max, 6)
        << " window_points=" << c.window_points << " horizon_points=" << c.horizon_points
        << " alpha=" << to_decimal(c.alpha, 2) << " N=" << c.order << "\n";
    out << "lambda,L_N,L_Nm1\n";
    for (std::size_t i = 0; i < c.lambda_grid.size(); ++i)
        out << to_decimal(c.lambda_grid[i], digits) << "," << to_decimal(c.values_N[i], digits) << ","
            << to_decimal(c.values_Nm1[i], digits) << "\n";
}

inline void write_wavefunction_csv(std::ostream& out, const WavefunctionTable& t, int digits) {
    out << "# q=" << t.q << " parity=" << to_string(t.parity) << " r=" << to_decimal(t.reliability_radius, 8)
        << " digits=" << digits;
    if (!t.warning.empty())
        out << " warning=" << t.warning;
    out << "\n";
    out << "x,psi\n";
    for (std::size_t i = 0; i < t.grid.size(); ++i)
        out << to_decimal(t.grid[i], digits) << "," << to_decimal(t.psi[i], digits) << "\n";
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, int digits) {
    out << "a2,a3,E,rho,digits,error\n";
    for (const auto& r : rows) {
        out << to_decimal(r.a2, digits) << ",";
        if (r.result)
            out << to_decimal(r.result->parameter, digits) << "," << to_decimal(r.result->E, digits) << ","
                << to_decimal(r.result->rho, digits) << "," << r.result->digits_achieved << ",\n";
        else
            out << ",,,," << r.error << "\n";
    }
}

} // namespace anharmonic
