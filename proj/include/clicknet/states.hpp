#pragma once

// Exact click-counting statistics of a multiplexed detector made of N on-off
// detectors with quantum efficiency eta.
//
// The probability of k coincident clicks is the normally ordered expectation
//     p_k = < : C(N,k) m^(N-k) (1 - m)^k : >,   m = exp(-eta n / N).
// Fock states give the D-symbol
//     D_{k,n} = C(N,k) sum_{j=0..k} C(k,j) (-1)^(k-j) (1 - eta (N-j)/N)^n,
// and every phase-insensitive state is a photon-number mixture of those.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "clicknet/errors.hpp"
#include "clicknet/textfmt.hpp"

namespace clicknet {

struct DetectorConfig {
    int n_detectors = 16;
    double efficiency = 1.0;

    void validate() const {
        if (n_detectors < 2 || n_detectors > 128) {
            throw ArgumentError("detector count must lie in [2, 128], got " + std::to_string(n_detectors));
        }
        if (!(efficiency > 0.0 && efficiency <= 1.0)) {
            throw ArgumentError("efficiency must lie in (0, 1], got " + text::format_double(efficiency));
        }
    }

    std::size_t bins() const { return static_cast<std::size_t>(n_detectors) + 1; }

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// State families. Only |alpha|^2 and |xi| enter the click statistics, so the
// parameters are stored as nonnegative magnitudes.
struct Coherent {
    double alpha_sq = 0.0;
    friend bool operator==(const Coherent&, const Coherent&) = default;
};
struct Thermal {
    double n_th = 0.0;
    friend bool operator==(const Thermal&, const Thermal&) = default;
};
struct Fock {
    int n = 0;
    friend bool operator==(const Fock&, const Fock&) = default;
};
struct Squeezed {
    double xi_abs = 0.0;
    friend bool operator==(const Squeezed&, const Squeezed&) = default;
};
/// n-photon-added thermal state; n_th is the mean of the thermal seed.
struct Npats {
    double n_th = 0.0;
    int n = 1;
    friend bool operator==(const Npats&, const Npats&) = default;
};
/// Normalized |alpha> + |-alpha>.
struct EvenCoherent {
    double alpha_sq = 0.0;
    friend bool operator==(const EvenCoherent&, const EvenCoherent&) = default;
};

using PureState = std::variant<Coherent, Thermal, Fock, Squeezed, Npats, EvenCoherent>;

/// weight * a + (1 - weight) * b. Components are pure, so nesting depth is one.
struct Mixture {
    double weight = 0.5;
    PureState a;
    PureState b;
    friend bool operator==(const Mixture&, const Mixture&) = default;
};

using StateSpec = std::variant<Coherent, Thermal, Fock, Squeezed, Npats, EvenCoherent, Mixture>;

enum class Family { coherent, thermal, fock, squeezed, npats, even_coherent, mixture };

inline std::string_view family_tag(Family f) {
    switch (f) {
        case Family::coherent: return "coherent";
        case Family::thermal: return "thermal";
        case Family::fock: return "fock";
        case Family::squeezed: return "squeezed";
        case Family::npats: return "npats";
        case Family::even_coherent: return "even_coherent";
        case Family::mixture: return "mixture";
    }
    return "unknown";
}

inline Family parse_family(std::string_view tag) {
    tag = text::trim(tag);
    for (Family f : {Family::coherent, Family::thermal, Family::fock, Family::squeezed, Family::npats,
                     Family::even_coherent, Family::mixture}) {
        if (family_tag(f) == tag) return f;
    }
    throw ArgumentError("unknown state family '" + std::string(tag) + "'");
}

inline Family family_of(const PureState& s) { return static_cast<Family>(s.index()); }
inline Family family_of(const StateSpec& s) { return static_cast<Family>(s.index()); }

/// Coherent and thermal light have a positive P function; every other
/// family here (and any mixture with such a component) does not.
inline bool is_nonclassical(const PureState& s) {
    const Family f = family_of(s);
    if (f == Family::coherent || f == Family::thermal) return false;
    if (const auto* fock = std::get_if<Fock>(&s)) return fock->n > 0;
    if (const auto* sq = std::get_if<Squeezed>(&s)) return sq->xi_abs > 0.0;
    if (const auto* ec = std::get_if<EvenCoherent>(&s)) return ec->alpha_sq > 0.0;
    return true;
}

inline bool is_nonclassical(const StateSpec& s) {
    if (const auto* mix = std::get_if<Mixture>(&s)) {
        return (mix->weight > 0.0 && is_nonclassical(mix->a)) || (mix->weight < 1.0 && is_nonclassical(mix->b));
    }
    return std::visit([](const auto& p) -> bool {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Mixture>) {
            return false;
        } else {
            return is_nonclassical(PureState(p));
        }
    }, s);
}

struct ClickDistribution {
    std::vector<double> probs;
    DetectorConfig config;

    double operator[](std::size_t k) const { return probs[k]; }
    std::size_t size() const { return probs.size(); }
};

namespace detail {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

inline void validate_pure(const PureState& s) {
    auto finite_nonneg = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ArgumentError(std::string(name) + " must be finite and nonnegative, got " + text::format_double(v));
        }
    };
    std::visit([&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, EvenCoherent>) {
            finite_nonneg(p.alpha_sq, "alpha_sq");
        } else if constexpr (std::is_same_v<T, Thermal>) {
            finite_nonneg(p.n_th, "n_th");
        } else if constexpr (std::is_same_v<T, Fock>) {
            if (p.n < 0) throw ArgumentError("Fock photon number must be nonnegative");
        } else if constexpr (std::is_same_v<T, Squeezed>) {
            finite_nonneg(p.xi_abs, "xi_abs");
        } else if constexpr (std::is_same_v<T, Npats>) {
            finite_nonneg(p.n_th, "n_th");
            if (p.n < 1) throw ArgumentError("NPATS added photon number must be >= 1");
        }
    }, s);
}

}  // namespace detail

inline void validate(const StateSpec& s) {
    if (const auto* mix = std::get_if<Mixture>(&s)) {
        if (!(mix->weight >= 0.0 && mix->weight <= 1.0)) {
            throw ArgumentError("mixture weight must lie in [0, 1], got " + text::format_double(mix->weight));
        }
        detail::validate_pure(mix->a);
        detail::validate_pure(mix->b);
        return;
    }
    std::visit([](const auto& p) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(p)>, Mixture>) detail::validate_pure(PureState(p));
    }, s);
}

namespace detail {

/// One more photon on the occupancy distribution p over k clicked bins: lost
/// with probability 1 - eta, otherwise it lands in one of the N bins. Every
/// term is nonnegative, so unlike the alternating closed form this loses no
/// digits at low efficiency.
inline void add_photon(std::vector<double>& p, int N, double eta) {
    for (int k = N; k >= 0; --k) {
        double v = p[k] * (1.0 - eta + eta * k / N);
        if (k > 0) v += p[k - 1] * eta * (N - k + 1) / N;
        p[k] = v;
    }
}

inline std::vector<double> fock_clicks(int n, const DetectorConfig& config) {
    std::vector<double> p(config.n_detectors + 1, 0.0);
    p[0] = 1.0;
    for (int i = 0; i < n; ++i) add_photon(p, config.n_detectors, config.efficiency);
    return p;
}

}  // namespace detail

/// D-symbol: click distribution of the Fock state |n>,
/// C(N,k) sum_j C(k,j) (-1)^(k-j) (1 - eta (N-j)/N)^n, evaluated through the
/// equivalent photon-by-photon recursion.
inline double d_symbol(int k, int n, const DetectorConfig& config) {
    config.validate();
    const int N = config.n_detectors;
    if (k < 0 || k > N) throw ArgumentError("click number k out of range [0, N]");
    if (n < 0) throw ArgumentError("photon number must be nonnegative");
    if (k > n) return 0.0;
    return detail::fock_clicks(n, config)[k];
}

/// <alpha_+| :exp(-lambda n / N): |alpha_+> for the even coherent state.
inline double g_function(double lambda, double alpha_sq, int n_detectors) {
    if (!std::isfinite(lambda) || !std::isfinite(alpha_sq) || n_detectors <= 0) {
        throw ArgumentError("g_function requires finite inputs and N > 0");
    }
    const double x = lambda / n_detectors;
    return (std::exp(-x * alpha_sq) + std::exp((x - 2.0) * alpha_sq)) / (1.0 + std::exp(-2.0 * alpha_sq));
}

namespace detail {

/// Accumulates sum_n w_n D_{., n} over increasing photon numbers.
class FockSeriesAccumulator {
public:
    explicit FockSeriesAccumulator(const DetectorConfig& config)
        : N_(config.n_detectors), eta_(config.efficiency), occupancy_(N_ + 1, 0.0), probs_(N_ + 1, 0.0) {
        occupancy_[0] = 1.0;
    }

    void add(int photons, double weight) {
        for (; photons_ < photons; ++photons_) add_photon(occupancy_, N_, eta_);
        for (int k = 0; k <= N_; ++k) probs_[k] += weight * occupancy_[k];
    }

    std::vector<double> take() { return std::move(probs_); }

private:
    int N_;
    double eta_;
    int photons_ = 0;
    std::vector<double> occupancy_;
    std::vector<double> probs_;
};

inline constexpr double kTailTolerance = 1e-12;
inline constexpr int kMaxSeriesTerms = 10000;
inline constexpr double kNormTolerance = 1e-9;

/// Sums a photon-number series with terms w_i D_{., first + step*i}.
/// ratio(i) = w_{i+1}/w_i; ratio_sup(i) bounds every ratio from index i on.
template <class Ratio, class RatioSup>
std::vector<double> sum_fock_series(const DetectorConfig& config, int first_photons, int step, double first_weight,
                                    Ratio ratio, RatioSup ratio_sup, std::string_view family) {
    FockSeriesAccumulator acc(config);
    // Crude bound on max_k |D_{k,n}|; D stays in [0, 1] here, so this is
    // conservative.
    const double magnitude = binomial(config.n_detectors, config.n_detectors / 2) * std::ldexp(1.0, config.n_detectors);
    double weight = first_weight;
    double tail = 0.0;
    for (int i = 0; i < kMaxSeriesTerms; ++i) {
        acc.add(first_photons + step * i, weight);
        weight *= ratio(i);
        const double sup = ratio_sup(i + 1);
        tail = sup < 1.0 ? weight / (1.0 - sup) : INFINITY;
        if (weight == 0.0) tail = 0.0;
        if (tail * magnitude < kTailTolerance) return acc.take();
    }
    throw ConvergenceError(std::string(family) + " series did not converge within " +
                               std::to_string(kMaxSeriesTerms) + " terms",
                           tail * magnitude);
}

inline std::vector<double> binomial_clicks(int N, double no_click) {
    std::vector<double> p(N + 1);
    const double click = 1.0 - no_click;
    for (int k = 0; k <= N; ++k) p[k] = binomial(N, k) * std::pow(no_click, N - k) * std::pow(click, k);
    return p;
}

inline std::vector<double> pure_distribution(const PureState& state, const DetectorConfig& config) {
    const int N = config.n_detectors;
    const double eta = config.efficiency;
    return std::visit([&](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Coherent>) {
            const double x = eta * s.alpha_sq / N;
            std::vector<double> p(N + 1);
            const double u = std::exp(-x);
            const double click = -std::expm1(-x);
            for (int k = 0; k <= N; ++k) p[k] = binomial(N, k) * std::pow(u, N - k) * std::pow(click, k);
            return p;
        } else if constexpr (std::is_same_v<T, Fock>) {
            return fock_clicks(s.n, config);
        } else if constexpr (std::is_same_v<T, Thermal>) {
            const double q = s.n_th / (s.n_th + 1.0);
            return sum_fock_series(config, 0, 1, 1.0 / (s.n_th + 1.0), [q](int) { return q; },
                                   [q](int) { return q; }, "thermal");
        } else if constexpr (std::is_same_v<T, Squeezed>) {
            const double t = std::tanh(s.xi_abs);
            const double t2 = t * t;
            // w_n = (tanh r / 2)^(2n) (2n)! / (n!)^2 / cosh r, over Fock states 2n.
            return sum_fock_series(
                config, 0, 2, 1.0 / std::cosh(s.xi_abs),
                [t2](int i) { return t2 * (2.0 * i + 1.0) / (2.0 * i + 2.0); }, [t2](int) { return t2; },
                "squeezed");
        } else if constexpr (std::is_same_v<T, Npats>) {
            const double q = s.n_th / (s.n_th + 1.0);
            const int n = s.n;
            // w_j = C(j, n) q^(j-n) (1-q)^(n+1) for j = n + i.
            auto ratio = [q, n](int i) { return q * (i + n + 1.0) / (i + 1.0); };
            return sum_fock_series(config, n, 1, std::pow(1.0 - q, n + 1), ratio, ratio, "npats");
        } else {
            static_assert(std::is_same_v<T, EvenCoherent>);
            // Even-coherent alternating sum with the binomial theorem applied to each of the
            // two exponentials in g(eta*lambda, alpha).
            const double x = eta * s.alpha_sq / N;
            const double overlap = std::exp(-2.0 * s.alpha_sq);
            const double norm = 1.0 + overlap;
            const double u = std::exp(-x);
            const double u_click = -std::expm1(-x);
            const double v = std::exp(x);
            const double v_click = -std::expm1(x);  // 1 - v, nonpositive
            std::vector<double> p(N + 1);
            for (int k = 0; k <= N; ++k) {
                const double direct = binomial(N, k) * std::pow(u, N - k) * std::pow(u_click, k);
                const double cross = binomial(N, k) * std::pow(v, N - k) * std::pow(v_click, k);
                p[k] = (direct + overlap * cross) / norm;
            }
            return p;
        }
    }, state);
}

inline void finalize(std::vector<double>& p, std::string_view family) {
    double total = 0.0;
    for (double& v : p) {
        if (!(v >= -1e-12)) {
            throw ConvergenceError(std::string(family) + " produced a negative click probability", v);
        }
        v = std::max(v, 0.0);
        total += v;
    }
    if (!(std::abs(total - 1.0) < kNormTolerance)) {
        throw ConvergenceError(std::string(family) + " click distribution is not normalized", std::abs(total - 1.0));
    }
}

}  // namespace detail

inline ClickDistribution click_distribution(const StateSpec& state, const DetectorConfig& config) {
    config.validate();
    validate(state);
    ClickDistribution out{{}, config};
    if (const auto* mix = std::get_if<Mixture>(&state)) {
        const auto pa = detail::pure_distribution(mix->a, config);
        const auto pb = detail::pure_distribution(mix->b, config);
        out.probs.resize(pa.size());
        for (std::size_t k = 0; k < pa.size(); ++k) out.probs[k] = mix->weight * pa[k] + (1.0 - mix->weight) * pb[k];
    } else {
        std::visit([&](const auto& s) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, Mixture>) {
                out.probs = detail::pure_distribution(PureState(s), config);
            }
        }, state);
    }
    detail::finalize(out.probs, family_tag(family_of(state)));
    return out;
}

inline double mean_photon_number(const PureState& state) {
    return std::visit([](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Coherent>) return s.alpha_sq;
        else if constexpr (std::is_same_v<T, Thermal>) return s.n_th;
        else if constexpr (std::is_same_v<T, Fock>) return static_cast<double>(s.n);
        else if constexpr (std::is_same_v<T, Squeezed>) {
            const double sh = std::sinh(s.xi_abs);
            return sh * sh;
        } else if constexpr (std::is_same_v<T, Npats>) return s.n_th * (s.n + 1) + s.n;
        else return s.alpha_sq * std::tanh(s.alpha_sq);
    }, state);
}

inline double mean_photon_number(const StateSpec& state) {
    if (const auto* mix = std::get_if<Mixture>(&state)) {
        return mix->weight * mean_photon_number(mix->a) + (1.0 - mix->weight) * mean_photon_number(mix->b);
    }
    return std::visit([](const auto& s) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Mixture>) return 0.0;
        else return mean_photon_number(PureState(s));
    }, state);
}

/// Inverts the mean-photon-number relation of a pure family. `added_photons`
/// is the NPATS photon number and is ignored elsewhere.
inline PureState params_for_mean(Family family, double target_nbar, int added_photons = 1) {
    if (!std::isfinite(target_nbar) || target_nbar < 0.0) {
        throw ArgumentError("target mean photon number must be finite and nonnegative");
    }
    switch (family) {
        case Family::coherent: return Coherent{target_nbar};
        case Family::thermal: return Thermal{target_nbar};
        case Family::fock: return Fock{static_cast<int>(std::floor(target_nbar))};
        case Family::squeezed: return Squeezed{std::asinh(std::sqrt(target_nbar))};
        case Family::npats: {
            if (added_photons < 1) throw ArgumentError("NPATS added photon number must be >= 1");
            if (target_nbar < added_photons) {
                throw ArgumentError("NPATS mean photon number must be >= the added photon number");
            }
            return Npats{(target_nbar - added_photons) / (added_photons + 1.0), added_photons};
        }
        case Family::even_coherent: {
            if (target_nbar == 0.0) return EvenCoherent{0.0};
            // nbar(a) = a tanh(a) is increasing and lies in [a - 2, a).
            double lo = target_nbar;
            double hi = target_nbar + 2.0;
            auto f = [target_nbar](double a) { return a * std::tanh(a) - target_nbar; };
            if (f(lo) > 0.0 || f(hi) < 0.0) throw ConvergenceError("even coherent inversion lost its bracket", hi - lo);
            for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
                const double mid = 0.5 * (lo + hi);
                (f(mid) < 0.0 ? lo : hi) = mid;
            }
            if (hi - lo > 1e-10) throw ConvergenceError("even coherent inversion did not converge", hi - lo);
            return EvenCoherent{0.5 * (lo + hi)};
        }
        case Family::mixture: break;
    }
    throw ArgumentError("params_for_mean is defined for pure families only");
}

// Canonical text form, e.g. "fock{n=3}", "npats{n_th=1.5;n=2}",
// "mixture{p=0.25;a=coherent{alpha_sq=8};b=fock{n=8}}". No commas, so the
// text can sit in a CSV field unquoted.

inline std::string to_text(const PureState& state) {
    using text::format_double;
    return std::visit([](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Coherent>) return "coherent{alpha_sq=" + format_double(s.alpha_sq) + "}";
        else if constexpr (std::is_same_v<T, Thermal>) return "thermal{n_th=" + format_double(s.n_th) + "}";
        else if constexpr (std::is_same_v<T, Fock>) return "fock{n=" + std::to_string(s.n) + "}";
        else if constexpr (std::is_same_v<T, Squeezed>) return "squeezed{xi_abs=" + format_double(s.xi_abs) + "}";
        else if constexpr (std::is_same_v<T, Npats>) {
            return "npats{n_th=" + format_double(s.n_th) + ";n=" + std::to_string(s.n) + "}";
        } else return "even_coherent{alpha_sq=" + format_double(s.alpha_sq) + "}";
    }, state);
}

inline std::string to_text(const StateSpec& state) {
    if (const auto* mix = std::get_if<Mixture>(&state)) {
        return "mixture{p=" + text::format_double(mix->weight) + ";a=" + to_text(mix->a) + ";b=" + to_text(mix->b) + "}";
    }
    return std::visit([](const auto& s) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Mixture>) return {};
        else return to_text(PureState(s));
    }, state);
}

inline std::string to_text(const DetectorConfig& c) {
    return "detector{N=" + std::to_string(c.n_detectors) + ";eta=" + text::format_double(c.efficiency) + "}";
}

namespace detail {

struct ParsedNode {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> fields;
};

inline ParsedNode parse_node(std::string_view s) {
    s = text::trim(s);
    const auto open = s.find('{');
    if (open == std::string_view::npos || s.back() != '}') {
        throw ArgumentError("malformed state text '" + std::string(s) + "'");
    }
    ParsedNode node{std::string(text::trim(s.substr(0, open))), {}};
    const std::string_view body = s.substr(open + 1, s.size() - open - 2);
    int depth = 0;
    std::size_t start = 0;
    auto push_field = [&](std::string_view field) {
        field = text::trim(field);
        if (field.empty()) return;
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw ArgumentError("malformed field '" + std::string(field) + "'");
        node.fields.emplace_back(std::string(text::trim(field.substr(0, eq))),
                                 std::string(text::trim(field.substr(eq + 1))));
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '{') ++depth;
        else if (body[i] == '}') --depth;
        else if (body[i] == ';' && depth == 0) {
            push_field(body.substr(start, i - start));
            start = i + 1;
        }
        if (depth < 0) throw ArgumentError("unbalanced braces in state text");
    }
    if (depth != 0) throw ArgumentError("unbalanced braces in state text");
    push_field(body.substr(start));
    return node;
}

inline const std::string& field(const ParsedNode& node, std::string_view key) {
    for (const auto& [k, v] : node.fields) {
        if (k == key) return v;
    }
    throw ArgumentError("state '" + node.tag + "' is missing field '" + std::string(key) + "'");
}

inline double real_field(const ParsedNode& node, std::string_view key) {
    double v = 0.0;
    if (!text::parse_double(field(node, key), v)) throw ArgumentError("field '" + std::string(key) + "' is not a number");
    return v;
}

inline int int_field(const ParsedNode& node, std::string_view key) {
    int v = 0;
    if (!text::parse_integer(field(node, key), v)) throw ArgumentError("field '" + std::string(key) + "' is not an integer");
    return v;
}

inline PureState parse_pure(const ParsedNode& node) {
    switch (parse_family(node.tag)) {
        case Family::coherent: return Coherent{real_field(node, "alpha_sq")};
        case Family::thermal: return Thermal{real_field(node, "n_th")};
        case Family::fock: return Fock{int_field(node, "n")};
        case Family::squeezed: return Squeezed{real_field(node, "xi_abs")};
        case Family::npats: return Npats{real_field(node, "n_th"), int_field(node, "n")};
        case Family::even_coherent: return EvenCoherent{real_field(node, "alpha_sq")};
        case Family::mixture: break;
    }
    throw ArgumentError("mixtures cannot be nested");
}

}  // namespace detail

inline StateSpec parse_state(std::string_view s) {
    const auto node = detail::parse_node(s);
    StateSpec out;
    if (parse_family(node.tag) == Family::mixture) {
        out = Mixture{detail::real_field(node, "p"), detail::parse_pure(detail::parse_node(detail::field(node, "a"))),
                      detail::parse_pure(detail::parse_node(detail::field(node, "b")))};
    } else {
        out = std::visit([](const auto& p) -> StateSpec { return p; }, detail::parse_pure(node));
    }
    validate(out);
    return out;
}

inline DetectorConfig parse_detector(std::string_view s) {
    const auto node = detail::parse_node(s);
    if (node.tag != "detector") throw ArgumentError("expected detector{...}");
    DetectorConfig c{detail::int_field(node, "N"), detail::real_field(node, "eta")};
    c.validate();
    return c;
}

}  // namespace clicknet
