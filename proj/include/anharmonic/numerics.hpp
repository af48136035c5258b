#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace anharmonic {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

// Every failure carries a short machine-readable signal name
// (domain-error, scaling-degenerate, bracket-not-found, ...).
class Error : public std::runtime_error {
public:
    Error(std::string signal, const std::string& what)
        : std::runtime_error(what), signal_(std::move(signal)) {}
    const std::string& signal() const noexcept { return signal_; }

private:
    std::string signal_;
};

inline constexpr int kMinGuardDigits = 20;

struct PrecisionContext {
    int decimal_digits = 16;
    int working_digits = 36;

    PrecisionContext() = default;
    PrecisionContext(int decimal, int working) : decimal_digits(decimal), working_digits(working) {
        if (decimal < 1)
            throw Error("invalid-config", "decimal_digits must be positive");
        if (working < decimal + kMinGuardDigits)
            throw Error("invalid-config", "working_digits must exceed decimal_digits by at least 20");
    }

    // guard = max(20, ceil(0.15 N_max))
    static PrecisionContext for_order(int decimal, int n_max) {
        int guard = std::max(kMinGuardDigits, (15 * std::max(n_max, 0) + 99) / 100);
        return {decimal, decimal + guard};
    }
};

// Sets the mpfr default precision for the lifetime of the scope. Results
// of arithmetic take the larger operand precision, so values entering a
// scope should go through at_precision().
class PrecisionScope {
public:
    explicit PrecisionScope(const PrecisionContext& ctx) : saved_(Real::default_precision()) {
        Real::default_precision(static_cast<unsigned>(ctx.working_digits));
    }
    ~PrecisionScope() { Real::default_precision(saved_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

inline Real at_precision(const Real& x, const PrecisionContext& ctx) {
    return Real(x, static_cast<unsigned>(ctx.working_digits));
}

inline Real at_precision(const Real& x) {
    return Real(x, Real::default_precision());
}

inline Real gamma_pos_real(const Real& z, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    Real zz = at_precision(z, ctx);
    if (zz <= 0)
        throw Error("domain-error", "gamma_pos_real needs z > 0");
    return boost::multiprecision::tgamma(zz);
}

inline Real factorial(unsigned long n, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    Real r;
    mpfr_fac_ui(r.backend().data(), n, MPFR_RNDN);
    return r;
}

inline bool looks_decimal(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-'))
        ++i;
    bool digits = false, dot = false;
    for (; i < s.size(); ++i) {
        char ch = s[i];
        if (ch >= '0' && ch <= '9')
            digits = true;
        else if (ch == '.' && !dot)
            dot = true;
        else
            break;
    }
    if (!digits)
        return false;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-'))
            ++i;
        bool exp_digits = false;
        for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i)
            exp_digits = true;
        if (!exp_digits)
            return false;
    }
    return i == s.size();
}

// Decimal strings are the only interchange format. A leading '+' is
// accepted, and so is a simple ratio like "-3/16".
inline Real parse_real(std::string_view text, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    std::string s(text);
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Real num = parse_real(s.substr(0, slash), ctx);
        Real den = parse_real(s.substr(slash + 1), ctx);
        if (den == 0)
            throw Error("invalid-number", "zero denominator in '" + s + "'");
        return num / den;
    }
    if (!looks_decimal(s))
        throw Error("invalid-number", "not a decimal number: '" + s + "'");
    if (s[0] == '+')
        s.erase(0, 1);
    return Real(s);
}

// Positional notation for moderate exponents, scientific otherwise.
inline std::string to_decimal(const Real& x, int significant) {
    if (x == 0)
        return "0";
    if (boost::multiprecision::isnan(x))
        return "nan";
    if (boost::multiprecision::isinf(x))
        return x > 0 ? "inf" : "-inf";
    // With the scientific flag the count is digits after the point, and 0
    // means full precision, so at least two significant digits come out.
    std::string sci = x.str(std::max(significant, 2) - 1, std::ios_base::scientific);
    bool neg = sci[0] == '-';
    if (neg)
        sci.erase(0, 1);
    auto e = sci.find('e');
    int exp10 = std::atoi(sci.c_str() + e + 1);
    std::string mant = sci.substr(0, e);
    mant.erase(std::remove(mant.begin(), mant.end(), '.'), mant.end());
    if (exp10 < -6 || exp10 > 30)
        return (neg ? "-" : "") + sci;
    std::string out;
    if (exp10 < 0) {
        out = "0." + std::string(static_cast<std::size_t>(-exp10 - 1), '0') + mant;
    } else if (static_cast<std::size_t>(exp10) + 1 >= mant.size()) {
        out = mant + std::string(exp10 + 1 - mant.size(), '0');
    } else {
        out = mant.substr(0, exp10 + 1) + "." + mant.substr(exp10 + 1);
    }
    return (neg ? "-" : "") + out;
}

// Enough digits to reproduce the binary value exactly when parsed back at
// the same precision.
inline std::string to_exact_decimal(const Real& x) {
    return x.str(0, std::ios_base::scientific);
}

inline Real pow10(int e) {
    return boost::multiprecision::pow(Real(10), e);
}

// Agreement in significant digits, -log10 |a-b|/|b|; 1000 when identical.
inline double digits_of_agreement(const Real& a, const Real& b) {
    Real diff = boost::multiprecision::abs(a - b);
    if (diff == 0)
        return 1000.0;
    Real scale = boost::multiprecision::abs(b);
    if (scale == 0)
        scale = 1;
    return -static_cast<double>(boost::multiprecision::log10(diff / scale));
}

// Leading significant digits of |x|, digits only, truncated (not rounded).
inline std::string leading_digits(const Real& x, int count) {
    std::string sci = boost::multiprecision::abs(x).str(count + 8, std::ios_base::scientific);
    std::string out;
    for (char ch : sci) {
        if (ch == 'e')
            break;
        if (ch >= '0' && ch <= '9')
            out.push_back(ch);
    }
    return out.substr(0, static_cast<std::size_t>(count));
}

} // namespace anharmonic
