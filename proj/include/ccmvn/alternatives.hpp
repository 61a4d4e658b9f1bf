#pragma once

// Distributions of the simulation study: the normal null, alternatives built
// from their marginals through a shared latent factor, and genuinely
// multivariate alternatives. Each comes with a sampler and exact (or
// quadrature) population central moments.

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccmvn/error.hpp"
#include "ccmvn/moments.hpp"
#include "ccmvn/rng.hpp"

namespace ccmvn {

enum class AltKind {
    normal,     ///< N(0, I)
    indep_exp,  ///< independent Exp(1) coordinates
    lognormal,  ///< Y_i = X0 X_i, all LogN(0, v/2), so Y_i ~ LogN(0, v)
    laplace1,   ///< Y_i = X_i - X0, all Exp(1)
    laplace2,   ///< Y_i = X0 X_i1 + X_i2 X_i3, all N(0, 1)
    beta,       ///< Y_i = X_i / (X_i + X0), X_i ~ Gamma(a), X0 ~ Gamma(b)
    chisq,      ///< Y_i = X0 + X_i, all Gamma(df/4, rate 1/2)
    t2,         ///< multivariate t with 2 degrees of freedom
    al,         ///< asymmetric Laplace AL(m 1, Sigma_r)
    mixture,    ///< w N(0, I) + (1 - w) N(m 1, Sigma_r)
};

/// One distribution. Only the parameters of its kind are meaningful; the
/// others stay zero so that equal distributions compare equal.
struct AlternativeSpec {
    AltKind kind = AltKind::normal;
    int p = 1;
    double v = 0.0;   ///< lognormal log-variance
    double a = 0.0;   ///< beta shape of X_i
    double b = 0.0;   ///< beta shape of X0
    double df = 0.0;  ///< chi-square degrees of freedom
    double m = 0.0;   ///< mean shift along 1 (al, mixture)
    double r = 0.0;   ///< common correlation of Sigma_r (al, mixture)
    double w = 0.0;   ///< weight of the N(0, I) component

    friend bool operator==(const AlternativeSpec&, const AlternativeSpec&) = default;
};

namespace detail {

struct KindInfo {
    AltKind kind;
    std::string_view name;
    std::vector<std::string_view> params;
};

inline const std::vector<KindInfo>& kind_table() {
    static const std::vector<KindInfo> table = {
        {AltKind::normal, "normal", {}},
        {AltKind::indep_exp, "indep_exp", {}},
        {AltKind::lognormal, "lognormal", {"v"}},
        {AltKind::laplace1, "laplace1", {}},
        {AltKind::laplace2, "laplace2", {}},
        {AltKind::beta, "beta", {"a", "b"}},
        {AltKind::chisq, "chisq", {"df"}},
        {AltKind::t2, "t2", {}},
        {AltKind::al, "al", {"m", "r"}},
        {AltKind::mixture, "mix", {"w", "m", "r"}},
    };
    return table;
}

inline const KindInfo& kind_info(AltKind k) {
    for (const auto& info : kind_table())
        if (info.kind == k) return info;
    throw InvalidArgument("unknown alternative kind");
}

inline double* param_slot(AlternativeSpec& s, std::string_view key) {
    if (key == "v") return &s.v;
    if (key == "a") return &s.a;
    if (key == "b") return &s.b;
    if (key == "df") return &s.df;
    if (key == "m") return &s.m;
    if (key == "r") return &s.r;
    if (key == "w") return &s.w;
    return nullptr;
}

/// Shortest text that reads back to exactly x; locale independent.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Names accepted by parse_alternative, with their parameters, for help text.
inline std::string alternative_names() {
    std::string out;
    for (const auto& info : detail::kind_table()) {
        if (!out.empty()) out += ", ";
        out += info.name;
        if (!info.params.empty()) {
            out += ":";
            for (std::size_t k = 0; k < info.params.size(); ++k) {
                if (k) out += ",";
                out += std::string(info.params[k]) + "=..";
            }
        }
    }
    return out;
}

/// Checks parameter ranges, including positive definiteness of Sigma_r.
inline void validate(const AlternativeSpec& s) {
    if (s.p < 1) throw InvalidArgument("alternative: p must be positive");
    auto need = [](bool ok, const char* what) {
        if (!ok) throw InvalidArgument(std::string("alternative: ") + what);
    };
    switch (s.kind) {
        case AltKind::lognormal: need(s.v > 0.0, "lognormal needs v > 0"); break;
        case AltKind::beta: need(s.a > 0.0 && s.b > 0.0, "beta needs a > 0 and b > 0"); break;
        case AltKind::chisq: need(s.df > 0.0, "chisq needs df > 0"); break;
        case AltKind::mixture: need(s.w > 0.0 && s.w < 1.0, "mix needs 0 < w < 1"); [[fallthrough]];
        case AltKind::al:
            // Eigenvalues of Sigma_r are 1 - r and 1 + (p - 1) r.
            need(std::isfinite(s.m), "mean shift must be finite");
            need(1.0 - s.r > 0.0 && 1.0 + (s.p - 1) * s.r > 0.0,
                 "Sigma_r is not positive definite for this (p, r)");
            break;
        default: break;
    }
}

/// Text form "name" or "name:key=value,...", without p.
inline std::string to_string(const AlternativeSpec& s) {
    const auto& info = detail::kind_info(s.kind);
    std::string out(info.name);
    auto copy = s;
    for (std::size_t k = 0; k < info.params.size(); ++k) {
        out += k == 0 ? ":" : ",";
        out += std::string(info.params[k]) + "=" + detail::format_number(*detail::param_slot(copy, info.params[k]));
    }
    return out;
}

inline AlternativeSpec parse_alternative(std::string_view text, int p) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const detail::KindInfo* info = nullptr;
    for (const auto& k : detail::kind_table())
        if (k.name == name) info = &k;
    if (!info)
        throw InvalidArgument("unknown alternative '" + std::string(name) + "'; valid: " + alternative_names());

    AlternativeSpec s;
    s.kind = info->kind;
    s.p = p;
    std::vector<bool> seen(info->params.size(), false);
    if (colon != std::string_view::npos) {
        std::string_view rest = text.substr(colon + 1);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view item = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos)
                throw InvalidArgument("alternative: expected key=value, got '" + std::string(item) + "'");
            const std::string_view key = item.substr(0, eq), val = item.substr(eq + 1);
            const auto it = std::find(info->params.begin(), info->params.end(), key);
            if (it == info->params.end())
                throw InvalidArgument("alternative '" + std::string(name) + "' has no parameter '" + std::string(key) +
                                      "'");
            double value = 0.0;
            const auto res = std::from_chars(val.data(), val.data() + val.size(), value);
            if (res.ec != std::errc{} || res.ptr != val.data() + val.size())
                throw InvalidArgument("alternative: bad number '" + std::string(val) + "'");
            *detail::param_slot(s, key) = value;
            seen[static_cast<std::size_t>(it - info->params.begin())] = true;
        }
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k])
            throw InvalidArgument("alternative '" + std::string(name) + "' needs parameter '" +
                                  std::string(info->params[k]) + "'");
    validate(s);
    return s;
}

/// Human-readable label used in reproduced tables.
inline std::string display_name(const AlternativeSpec& s) {
    auto num = detail::format_number;
    switch (s.kind) {
        case AltKind::normal: return "Normal";
        case AltKind::indep_exp: return "Indep. Exp(1)";
        case AltKind::lognormal: return "LogN(0," + num(s.v) + ")";
        case AltKind::laplace1: return "Laplace(0,1) type I";
        case AltKind::laplace2: return "Laplace(0,1) type II";
        case AltKind::beta: return "Beta(" + num(s.a) + "," + num(s.b) + ")";
        case AltKind::chisq: return "Chi2(" + num(s.df) + ")";
        case AltKind::t2: return "t(2)";
        case AltKind::al: return "AL(" + num(s.m) + ",S" + num(s.r) + ")";
        case AltKind::mixture:
            return num(s.w) + "N(0,S0)+" + num(1.0 - s.w) + "N(" + num(s.m) + ",S" + num(s.r) + ")";
    }
    return "?";
}

/// Rows of the two alternatives tables in order, as spec text. The three
/// lognormal rows are labelled LogN(0,L) in the published tables; their
/// values are reproduced by a marginal log-variance of L^4 / 8.
inline const std::vector<std::string>& catalog() {
    static const std::vector<std::string> rows = {
        "indep_exp",           "lognormal:v=2",       "lognormal:v=0.125",    "lognormal:v=0.0078125",
        "laplace1",            "laplace2",            "beta:a=1,b=1",         "beta:a=1,b=2",
        "beta:a=2,b=2",        "chisq:df=2",          "chisq:df=8",           "t2",
        "al:m=0,r=0",          "al:m=1,r=0",          "al:m=3,r=0",           "al:m=1,r=0.5",
        "al:m=1,r=0.9",        "mix:w=0.9,m=1,r=0",   "mix:w=0.9,m=2,r=0",    "mix:w=0.9,m=0,r=0.5",
        "mix:w=0.9,m=1,r=0.5", "mix:w=0.9,m=2,r=0.5", "mix:w=0.75,m=1,r=0",   "mix:w=0.75,m=2,r=0",
        "mix:w=0.75,m=0,r=0.5", "mix:w=0.75,m=1,r=0.5", "mix:w=0.75,m=2,r=0.5"};
    return rows;
}

/// Unit variances, all correlations r.
inline Matrix equicorrelation(int p, double r) {
    Matrix s = Matrix::Constant(p, p, r);
    s.diagonal().setOnes();
    return s;
}

// -- sampling ----------------------------------------------------------------

/// n draws as the rows of an n x p matrix.
inline Matrix generate(const AlternativeSpec& s, Eigen::Index n, Philox& rng) {
    validate(s);
    if (n < 1) throw InvalidArgument("generate: n must be positive");
    const int p = s.p;
    Matrix y(n, p);
    std::normal_distribution<double> z;
    std::exponential_distribution<double> e;

    switch (s.kind) {
        case AltKind::normal:
            for (Eigen::Index r = 0; r < n; ++r)
                for (int i = 0; i < p; ++i) y(r, i) = z(rng);
            break;
        case AltKind::indep_exp:
            for (Eigen::Index r = 0; r < n; ++r)
                for (int i = 0; i < p; ++i) y(r, i) = e(rng);
            break;
        case AltKind::lognormal: {
            const double sd = std::sqrt(s.v / 2.0);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double x0 = std::exp(sd * z(rng));
                for (int i = 0; i < p; ++i) y(r, i) = x0 * std::exp(sd * z(rng));
            }
            break;
        }
        case AltKind::laplace1:
            for (Eigen::Index r = 0; r < n; ++r) {
                const double x0 = e(rng);
                for (int i = 0; i < p; ++i) y(r, i) = e(rng) - x0;
            }
            break;
        case AltKind::laplace2:
            for (Eigen::Index r = 0; r < n; ++r) {
                const double x0 = z(rng);
                for (int i = 0; i < p; ++i) {
                    const double x1 = z(rng), x2 = z(rng), x3 = z(rng);
                    y(r, i) = x0 * x1 + x2 * x3;
                }
            }
            break;
        case AltKind::beta: {
            std::gamma_distribution<double> ga(s.a), gb(s.b);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double x0 = gb(rng);
                for (int i = 0; i < p; ++i) {
                    const double xi = ga(rng);
                    y(r, i) = xi / (xi + x0);
                }
            }
            break;
        }
        case AltKind::chisq: {
            std::gamma_distribution<double> g(s.df / 4.0, 2.0);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double x0 = g(rng);
                for (int i = 0; i < p; ++i) y(r, i) = x0 + g(rng);
            }
            break;
        }
        case AltKind::t2: {
            std::chi_squared_distribution<double> c(2.0);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double scale = 1.0 / std::sqrt(c(rng) / 2.0);
                for (int i = 0; i < p; ++i) y(r, i) = scale * z(rng);
            }
            break;
        }
        case AltKind::al: {
            const Matrix l = equicorrelation(p, s.r).llt().matrixL();
            Vector g(p);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double w = e(rng);
                for (int i = 0; i < p; ++i) g(i) = z(rng);
                y.row(r) = (Vector::Constant(p, w * s.m) + std::sqrt(w) * (l * g)).transpose();
            }
            break;
        }
        case AltKind::mixture: {
            const Matrix l = equicorrelation(p, s.r).llt().matrixL();
            std::uniform_real_distribution<double> u;
            Vector g(p);
            for (Eigen::Index r = 0; r < n; ++r) {
                const bool base = u(rng) < s.w;
                for (int i = 0; i < p; ++i) g(i) = z(rng);
                if (base)
                    y.row(r) = g.transpose();
                else
                    y.row(r) = (Vector::Constant(p, s.m) + l * g).transpose();
            }
            break;
        }
    }
    return y;
}

// -- population moments ------------------------------------------------------

namespace detail {

using Real = long double;
using Poly = std::vector<Real>;  ///< coefficients in ascending powers

inline Real factorial(int k) {
    Real f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

inline Real choose(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

/// E Z^k for standard normal Z.
inline Real normal_raw(int k) {
    if (k % 2) return 0;
    Real f = 1;
    for (int i = k - 1; i > 1; i -= 2) f *= i;
    return f;
}

/// E X^k for X ~ Gamma(shape, scale).
inline Real gamma_raw(Real shape, Real scale, int k) {
    Real f = 1;
    for (int i = 0; i < k; ++i) f *= scale * (shape + i);
    return f;
}

inline Poly poly_mul(const Poly& x, const Poly& y) {
    Poly out(x.size() + y.size() - 1, 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
    return out;
}

/// E_X0[prod_i g_{c_i}(X0)] for polynomial conditional moments g_c.
template <class CondPoly, class X0Raw>
Real shared_factor_raw(std::span<const int> counts, CondPoly&& cond, X0Raw&& x0_raw) {
    Poly prod{1};
    for (int c : counts) prod = poly_mul(prod, cond(c));
    Real total = 0;
    for (std::size_t k = 0; k < prod.size(); ++k)
        if (prod[k] != 0) total += prod[k] * x0_raw(static_cast<int>(k));
    return total;
}

/// Gaussian moments E prod_k G_{idx_k} with G ~ N(0, cov), by Isserlis.
inline Real isserlis(const Matrix& cov, std::vector<int> idx) {
    if (idx.empty()) return 1;
    if (idx.size() % 2) return 0;
    const int first = idx.front();
    Real total = 0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
        if (cov(first, idx[k]) == 0.0) continue;
        std::vector<int> rest;
        for (std::size_t l = 1; l < idx.size(); ++l)
            if (l != k) rest.push_back(idx[l]);
        total += static_cast<Real>(cov(first, idx[k])) * isserlis(cov, rest);
    }
    return total;
}

/// E prod_k (W mu + sqrt(W) G)_{idx_k} with G ~ N(0, cov) independent of a
/// scalar W whose raw moments are w_raw(k). W = 1 gives a shifted normal.
template <class WRaw>
Real scaled_gaussian_raw(Real mu, const Matrix& cov, const std::vector<int>& idx, WRaw&& w_raw) {
    const auto s = idx.size();
    Real total = 0;
    for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
        std::vector<int> rest;
        int shifts = 0;
        for (std::size_t k = 0; k < s; ++k) {
            if (mask & (1u << k))
                ++shifts;
            else
                rest.push_back(idx[k]);
        }
        if (rest.size() % 2) continue;
        const Real g = isserlis(cov, rest);
        if (g == 0) continue;
        total += std::pow(mu, static_cast<Real>(shifts)) * g * w_raw(shifts + static_cast<int>(rest.size()) / 2);
    }
    return total;
}

/// E[(X / (X + x0))^c] for X ~ Gamma(a, 1), c = 0..6.
inline std::array<double, 7> beta_conditional(double a, double x0) {
    std::array<double, 7> out{};
    out[0] = 1.0;
    const double lg = std::lgamma(a);
    boost::math::quadrature::exp_sinh<double> integrator;
    for (int c = 1; c <= 6; ++c) {
        auto f = [&](double x) {
            if (x <= 0.0) return 0.0;
            const double ratio = x / (x + x0);
            return std::pow(ratio, c) * std::exp((a - 1.0) * std::log(x) - x - lg);
        };
        out[static_cast<std::size_t>(c)] = integrator.integrate(f, 1e-13);
    }
    return out;
}

/// Raw moment E prod_i Y_i^{counts_i}.
class RawMoments {
public:
    explicit RawMoments(const AlternativeSpec& s) : s_(s) {
        if (s.kind == AltKind::t2)
            throw UndefinedMoments("t(2) has no finite moments of order 2 or higher");
        if (s.kind == AltKind::al || s.kind == AltKind::mixture) cov_ = equicorrelation(s.p, s.r);
    }

    Real operator()(std::vector<int> counts) {
        auto it = cache_.find(counts);
        if (it != cache_.end()) return it->second;
        const Real v = compute(counts);
        cache_.emplace(std::move(counts), v);
        return v;
    }

private:
    Real compute(const std::vector<int>& counts) {
        const auto& s = s_;
        switch (s.kind) {
            case AltKind::normal: {
                Real prod = 1;
                for (int c : counts) prod *= normal_raw(c);
                return prod;
            }
            case AltKind::indep_exp: {
                Real prod = 1;
                for (int c : counts) prod *= factorial(c);
                return prod;
            }
            case AltKind::lognormal: {
                // E exp(k sd Z) = exp(k^2 sd^2 / 2), sd^2 = v / 2.
                const Real half = static_cast<Real>(s.v) / 4;
                int total = 0;
                Real prod = 1;
                for (int c : counts) {
                    total += c;
                    prod *= std::exp(half * c * c);
                }
                return prod * std::exp(half * total * total);
            }
            case AltKind::laplace1:
                // (X - x0)^c = sum_j C(c, j) X^j (-x0)^(c-j)
                return shared_factor_raw(
                    counts,
                    [](int c) {
                        Poly g(static_cast<std::size_t>(c) + 1, 0);
                        for (int j = 0; j <= c; ++j)
                            g[static_cast<std::size_t>(c - j)] =
                                choose(c, j) * factorial(j) * (((c - j) % 2) ? -1 : 1);
                        return g;
                    },
                    [](int k) { return factorial(k); });
            case AltKind::laplace2:
                // (x0 X1 + X2 X3)^c = sum_j C(c, j) x0^j X1^j (X2 X3)^(c-j)
                return shared_factor_raw(
                    counts,
                    [](int c) {
                        Poly g(static_cast<std::size_t>(c) + 1, 0);
                        for (int j = 0; j <= c; ++j) {
                            const Real rest = normal_raw(c - j);
                            g[static_cast<std::size_t>(j)] = choose(c, j) * normal_raw(j) * rest * rest;
                        }
                        return g;
                    },
                    [](int k) { return normal_raw(k); });
            case AltKind::chisq: {
                const Real shape = static_cast<Real>(s.df) / 4;
                return shared_factor_raw(
                    counts,
                    [&](int c) {
                        Poly g(static_cast<std::size_t>(c) + 1, 0);
                        for (int j = 0; j <= c; ++j)
                            g[static_cast<std::size_t>(c - j)] = choose(c, j) * gamma_raw(shape, 2, j);
                        return g;
                    },
                    [&](int k) { return gamma_raw(shape, 2, k); });
            }
            case AltKind::beta: return beta_raw(counts);
            case AltKind::al:
                return scaled_gaussian_raw(static_cast<Real>(s.m), cov_, expand(counts),
                                           [](int k) { return factorial(k); });
            case AltKind::mixture: {
                const auto idx = expand(counts);
                const Matrix eye = Matrix::Identity(s.p, s.p);
                const auto one = [](int) { return Real{1}; };
                return static_cast<Real>(s.w) * scaled_gaussian_raw(0, eye, idx, one) +
                       static_cast<Real>(1.0 - s.w) * scaled_gaussian_raw(static_cast<Real>(s.m), cov_, idx, one);
            }
            case AltKind::t2: break;
        }
        throw UndefinedMoments("no moments for this alternative");
    }

    static std::vector<int> expand(const std::vector<int>& counts) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < counts.size(); ++i)
            for (int k = 0; k < counts[i]; ++k) idx.push_back(static_cast<int>(i));
        return idx;
    }

    Real beta_raw(const std::vector<int>& counts) {
        const double b = s_.b, lg = std::lgamma(b);
        boost::math::quadrature::exp_sinh<double> integrator;
        auto f = [&](double x0) {
            if (x0 <= 0.0) return 0.0;
            auto it = beta_cache_.find(x0);
            if (it == beta_cache_.end()) it = beta_cache_.emplace(x0, beta_conditional(s_.a, x0)).first;
            double prod = std::exp((b - 1.0) * std::log(x0) - x0 - lg);
            for (int c : counts) prod *= it->second[static_cast<std::size_t>(c)];
            return prod;
        };
        return integrator.integrate(f, 1e-13);
    }

    AlternativeSpec s_;
    Matrix cov_;
    std::map<std::vector<int>, Real> cache_;
    std::map<double, std::array<double, 7>> beta_cache_;
};

}  // namespace detail

/// Population central moments of orders 2..max_order.
inline MomentTable population_moments(const AlternativeSpec& s, int max_order) {
    validate(s);
    detail::RawMoments raw(s);
    const int p = s.p;
    std::vector<detail::Real> mean(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        std::vector<int> c(static_cast<std::size_t>(p), 0);
        c[static_cast<std::size_t>(i)] = 1;
        mean[static_cast<std::size_t>(i)] = raw(c);
    }
    return MomentTable::from_function(p, max_order, [&](std::span<const int> idx) {
        // E prod (Y - mu) = sum over subsets T of E[prod_T Y] prod_{not T} (-mu).
        const auto order = idx.size();
        detail::Real total = 0;
        for (std::uint32_t mask = 0; mask < (1u << order); ++mask) {
            std::vector<int> counts(static_cast<std::size_t>(p), 0);
            detail::Real factor = 1;
            for (std::size_t k = 0; k < order; ++k) {
                const auto i = static_cast<std::size_t>(idx[k]);
                if (mask & (1u << k))
                    ++counts[i];
                else
                    factor *= -mean[i];
            }
            total += factor * raw(counts);
        }
        return static_cast<double>(total);
    });
}

}  // namespace ccmvn
