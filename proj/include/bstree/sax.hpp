#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bstree/errors.hpp"

namespace bstree {

namespace detail {

// Horner evaluation with coefficients ordered from degree 0 upward.
inline double polyval(const double (&c)[8], double x) {
    double acc = c[7];
    for (int i = 6; i >= 0; --i) acc = acc * x + c[i];
    return acc;
}

}  // namespace detail

// Inverse CDF of the standard normal distribution (Wichura's AS241, PPND16 variant).
// Absolute error is far below 1e-8 over (0, 1).
inline double norm_quantile(double p) {
    static constexpr double a[8] = {3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
                                    1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
                                    3.3430575583588128105e4,  2.5090809287301226727e3};
    static constexpr double b[8] = {1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
                                    5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
                                    2.8729085735721942674e4,  5.2264952788528545610e3};
    static constexpr double c[8] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                    2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[8] = {1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
                                    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
                                    5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static constexpr double e[8] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                    2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[8] = {1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
                                    1.42151175831644588870e-7, 2.04426310338993978564e-15};

    if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("norm_quantile: p must lie in (0, 1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * detail::polyval(a, r) / detail::polyval(b, r);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = detail::polyval(c, r) / detail::polyval(d, r);
    } else {
        r -= 5.0;
        val = detail::polyval(e, r) / detail::polyval(f, r);
    }
    return q < 0.0 ? -val : val;
}

// Equiprobable cut points: beta_i = Phi^-1(i/alpha), i = 1..alpha-1, strictly increasing.
inline std::vector<double> breakpoints(int alpha) {
    if (alpha < 2 || alpha > 26) throw std::invalid_argument("alphabet size must lie in [2, 26]");
    std::vector<double> cuts(static_cast<std::size_t>(alpha) - 1);
    for (int i = 1; i < alpha; ++i) cuts[static_cast<std::size_t>(i) - 1] = norm_quantile(static_cast<double>(i) / alpha);
    return cuts;
}

struct SAXConfig {
    int w = 0;      // window length in points
    int l = 0;      // word length in segments
    int alpha = 0;  // alphabet size
    double epsilon_std = 1e-12;
    std::vector<double> cuts;  // alpha - 1 breakpoints

    SAXConfig() = default;

    SAXConfig(int w_, int l_, int alpha_, double epsilon = 1e-12)
        : w(w_), l(l_), alpha(alpha_), epsilon_std(epsilon) {
        if (w <= 0 || l <= 0) throw std::invalid_argument("window and word length must be positive");
        if (w % l != 0) throw std::invalid_argument("word length must divide window length");
        if (!(epsilon_std > 0.0)) throw std::invalid_argument("epsilon_std must be positive");
        cuts = breakpoints(alpha);
    }

    int segment_size() const { return w / l; }

    bool compatible(const SAXConfig& other) const {
        return w == other.w && l == other.l && alpha == other.alpha;
    }
};

// Fixed-length word over letters 'a'..('a' + alpha - 1); the index key universe.
// Ordering is plain lexicographic string order.
struct SAXWord {
    std::string symbols;

    SAXWord() = default;
    explicit SAXWord(std::string s) : symbols(std::move(s)) {}

    std::size_t length() const { return symbols.size(); }
    int cell(std::size_t i) const { return symbols[i] - 'a'; }
    const std::string& str() const { return symbols; }

    auto operator<=>(const SAXWord&) const = default;
};

struct NormalizedWindow {
    std::vector<double> values;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation of the source window
};

inline void require_word(const SAXWord& word, const SAXConfig& cfg) {
    if (static_cast<int>(word.length()) != cfg.l)
        throw ConfigMismatchError("SAX word length " + std::to_string(word.length()) +
                                  " does not match configured word length " + std::to_string(cfg.l));
    for (char ch : word.symbols)
        if (ch < 'a' || ch >= static_cast<char>('a' + cfg.alpha))
            throw ConfigMismatchError("SAX word symbol outside configured alphabet");
}

// z-normalization with a flat-window guard: windows whose population stddev is at or
// below epsilon_std map to all zeros. Source mean/stddev are preserved on the result.
inline NormalizedWindow znormalize(std::span<const double> raw, const SAXConfig& cfg) {
    if (static_cast<int>(raw.size()) != cfg.w)
        throw std::invalid_argument("window length mismatch: expected " + std::to_string(cfg.w) + " values, got " +
                                    std::to_string(raw.size()));
    const double n = static_cast<double>(raw.size());
    double sum = 0.0;
    for (double v : raw) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : raw) {
        const double d = v - mean;
        ss += d * d;
    }
    const double stddev = std::sqrt(ss / n);

    NormalizedWindow out;
    out.mean = mean;
    out.stddev = stddev;
    out.values.resize(raw.size());
    if (stddev <= cfg.epsilon_std) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = (raw[i] - mean) / stddev;
    }
    return out;
}

// Piecewise aggregate approximation: mean of each of the l consecutive segments.
inline std::vector<double> paa(const NormalizedWindow& nw, const SAXConfig& cfg) {
    if (static_cast<int>(nw.values.size()) != cfg.w)
        throw std::invalid_argument("normalized window length does not match configuration");
    const int seg = cfg.segment_size();
    std::vector<double> out(static_cast<std::size_t>(cfg.l));
    for (int i = 0; i < cfg.l; ++i) {
        double s = 0.0;
        const int base = i * seg;
        for (int j = 0; j < seg; ++j) s += nw.values[static_cast<std::size_t>(base + j)];
        out[static_cast<std::size_t>(i)] = s / seg;
    }
    return out;
}

// Maps each PAA value to the letter of its breakpoint cell. A value equal to a
// breakpoint maps to the upper cell, which keeps the mapping monotone over
// half-open cells [beta_{i-1}, beta_i).
inline SAXWord discretize(const std::vector<double>& paa_values, const SAXConfig& cfg) {
    if (static_cast<int>(paa_values.size()) != cfg.l)
        throw std::invalid_argument("PAA length does not match configured word length");
    std::string s(static_cast<std::size_t>(cfg.l), 'a');
    for (int i = 0; i < cfg.l; ++i) {
        const auto it = std::upper_bound(cfg.cuts.begin(), cfg.cuts.end(), paa_values[static_cast<std::size_t>(i)]);
        const auto idx = it - cfg.cuts.begin();
        s[static_cast<std::size_t>(i)] = static_cast<char>('a' + idx);
    }
    return SAXWord(std::move(s));
}

inline std::pair<SAXWord, NormalizedWindow> sax_transform(std::span<const double> raw, const SAXConfig& cfg) {
    NormalizedWindow nw = znormalize(raw, cfg);
    SAXWord word = discretize(paa(nw, cfg), cfg);
    return {std::move(word), std::move(nw)};
}

namespace detail {

// Distance between two breakpoint cells, zero when adjacent or equal.
// Cells are 0-based; cuts[k] is the lower boundary of cell k+1.
inline double cell_gap(int lo_cell, int hi_cell, const std::vector<double>& cuts) {
    if (hi_cell - lo_cell <= 1) return 0.0;
    return cuts[static_cast<std::size_t>(hi_cell) - 1] - cuts[static_cast<std::size_t>(lo_cell)];
}

}  // namespace detail

// MinDist lower bound between two SAX words:
//   sqrt(w/l) * sqrt(sum_i gap(q_i, c_i)^2)
// Never exceeds the Euclidean distance between the z-normalized source windows.
inline double mindist(const SAXWord& q, const SAXWord& c, const SAXConfig& cfg) {
    require_word(q, cfg);
    require_word(c, cfg);
    double acc = 0.0;
    for (std::size_t i = 0; i < q.length(); ++i) {
        const int qa = q.cell(i);
        const int cb = c.cell(i);
        const double d = detail::cell_gap(std::min(qa, cb), std::max(qa, cb), cfg.cuts);
        acc += d * d;
    }
    return std::sqrt(static_cast<double>(cfg.w) / cfg.l) * std::sqrt(acc);
}

// Positionwise symbol interval covering a set of SAX words.
struct SymbolEnvelope {
    std::string lo;
    std::string hi;

    SymbolEnvelope() = default;

    static SymbolEnvelope of(const SAXWord& word) {
        SymbolEnvelope e;
        e.lo = word.symbols;
        e.hi = word.symbols;
        return e;
    }

    void expand(const SAXWord& word) {
        if (lo.empty()) {
            lo = word.symbols;
            hi = word.symbols;
            return;
        }
        for (std::size_t i = 0; i < word.symbols.size(); ++i) {
            lo[i] = std::min(lo[i], word.symbols[i]);
            hi[i] = std::max(hi[i], word.symbols[i]);
        }
    }

    bool contains(const SAXWord& word) const {
        for (std::size_t i = 0; i < word.symbols.size(); ++i)
            if (word.symbols[i] < lo[i] || word.symbols[i] > hi[i]) return false;
        return true;
    }

    bool empty() const { return lo.empty(); }

    bool operator==(const SymbolEnvelope&) const = default;
};

// Lower bound between a query word and every word covered by the envelope. Positions
// whose cell is adjacent to the interval contribute zero; otherwise the gap to the
// nearest interval endpoint. Always <= min over member words of mindist(q, member).
inline double mindist_envelope(const SAXWord& q, const SymbolEnvelope& env, const SAXConfig& cfg) {
    require_word(q, cfg);
    if (env.lo.size() != q.length() || env.hi.size() != q.length())
        throw std::invalid_argument("envelope length does not match word length");
    double acc = 0.0;
    for (std::size_t i = 0; i < q.length(); ++i) {
        const int mn = env.lo[i] - 'a';
        const int mx = env.hi[i] - 'a';
        if (mn > mx) throw std::invalid_argument("invalid envelope: min symbol above max symbol");
        const int c = q.cell(i);
        double d = 0.0;
        if (c < mn - 1)
            d = detail::cell_gap(c, mn, cfg.cuts);
        else if (c > mx + 1)
            d = detail::cell_gap(mx, c, cfg.cuts);
        acc += d * d;
    }
    return std::sqrt(static_cast<double>(cfg.w) / cfg.l) * std::sqrt(acc);
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace bstree
