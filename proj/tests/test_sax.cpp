#include <cmath>
#include <vector>

#include "bstree/rng.hpp"
#include "bstree/sax.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bstree;

TEST_SUITE_BEGIN("sax");

TEST_CASE("config validation") {
    CHECK_THROWS_AS(SAXConfig(7, 3, 4), std::invalid_argument);   // l does not divide w
    CHECK_THROWS_AS(SAXConfig(8, 4, 1), std::invalid_argument);   // alpha too small
    CHECK_THROWS_AS(SAXConfig(8, 4, 27), std::invalid_argument);  // alpha too large
    CHECK_THROWS_AS(SAXConfig(0, 1, 4), std::invalid_argument);
    const SAXConfig cfg(8, 4, 4);
    CHECK(cfg.segment_size() == 2);
    CHECK(cfg.cuts.size() == 3);
}

TEST_CASE("breakpoints match the reference quantile table") {
    for (const auto& [alpha, ref] : oracles::reference_breakpoints()) {
        const auto cuts = breakpoints(alpha);
        REQUIRE(cuts.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(cuts[i] - ref[i]) < 1e-8);
    }
    CHECK(breakpoints(2) == std::vector<double>{0.0});
    CHECK(breakpoints(3)[0] == doctest::Approx(-0.4307).epsilon(1e-3));
    CHECK(breakpoints(4)[0] == doctest::Approx(-0.6745).epsilon(1e-3));
    CHECK(breakpoints(4)[1] == doctest::Approx(0.0));
}

TEST_CASE("breakpoints are strictly increasing and antisymmetric") {
    for (int alpha = 2; alpha <= 26; ++alpha) {
        const auto cuts = breakpoints(alpha);
        REQUIRE(static_cast<int>(cuts.size()) == alpha - 1);
        for (std::size_t i = 1; i < cuts.size(); ++i) CHECK(cuts[i - 1] < cuts[i]);
        for (std::size_t i = 0; i < cuts.size(); ++i) CHECK(std::fabs(cuts[i] + cuts[cuts.size() - 1 - i]) < 1e-12);
    }
}

TEST_CASE("norm_quantile spot checks") {
    CHECK(norm_quantile(0.5) == doctest::Approx(0.0));
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(norm_quantile(0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-12));
    CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
}

TEST_CASE("norm_quantile round-trips through the normal CDF in both tails") {
    // Phi(x) = erfc(-x / sqrt 2) / 2; exercises the central, near-tail and far-tail branches
    for (double p : {1e-15, 1e-13, 1e-12, 1e-10, 1e-9, 1e-6, 1e-3, 0.05, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        const double x = norm_quantile(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        CHECK(std::fabs(back - p) <= 1e-9 * std::min(p, 1.0 - p));
    }
}

TEST_CASE("znormalize basic example") {
    const SAXConfig cfg(3, 1, 4);
    const std::vector<double> raw = {1.0, 2.0, 3.0};
    const auto nw = znormalize(raw, cfg);
    CHECK(nw.mean == doctest::Approx(2.0));
    CHECK(nw.stddev == doctest::Approx(0.8164965809).epsilon(1e-9));
    CHECK(nw.values[0] == doctest::Approx(-1.2247448714).epsilon(1e-9));
    CHECK(nw.values[1] == doctest::Approx(0.0));
    CHECK(nw.values[2] == doctest::Approx(1.2247448714).epsilon(1e-9));
}

TEST_CASE("znormalize flat window maps to zeros") {
    const SAXConfig cfg(4, 2, 4);
    const auto nw = znormalize(std::vector<double>{5.0, 5.0, 5.0, 5.0}, cfg);
    for (double v : nw.values) CHECK(v == 0.0);
    CHECK(nw.mean == doctest::Approx(5.0));
    CHECK(nw.stddev == doctest::Approx(0.0));
}

TEST_CASE("znormalize is translation invariant") {
    const SAXConfig cfg(5, 1, 3);
    const std::vector<double> base = {0.4, -1.2, 3.3, 0.0, 2.2};
    const auto a = znormalize(base, cfg);
    std::vector<double> shifted = base;
    for (double& v : shifted) v += 17.5;
    const auto b = znormalize(shifted, cfg);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-9));
}

TEST_CASE("znormalize rejects length mismatch") {
    const SAXConfig cfg(4, 2, 4);
    CHECK_THROWS_AS(znormalize(std::vector<double>{1.0, 2.0}, cfg), std::invalid_argument);
}

TEST_CASE("znormalize output has zero mean, unit deviation") {
    Rng rng(7);
    const SAXConfig cfg(64, 8, 6);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> raw(64);
        for (double& v : raw) v = rng.gaussian() * 3.0 + 5.0;
        const auto nw = znormalize(raw, cfg);
        double mean = 0.0;
        for (double v : nw.values) mean += v;
        mean /= 64.0;
        double var = 0.0;
        for (double v : nw.values) var += (v - mean) * (v - mean);
        var /= 64.0;
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
}

TEST_CASE("paa segment means") {
    const SAXConfig cfg2(4, 2, 4);
    NormalizedWindow nw;
    nw.values = {1.0, 1.0, 3.0, 3.0};
    CHECK(paa(nw, cfg2) == std::vector<double>{1.0, 3.0});

    const SAXConfig cfg4(8, 4, 4);
    nw.values = {2.0, 0.0, 0.0, 2.0, 4.0, 6.0, 6.0, 4.0};
    CHECK(paa(nw, cfg4) == std::vector<double>{1.0, 1.0, 5.0, 5.0});

    nw.values.assign(8, 0.0);
    CHECK(paa(nw, cfg4) == std::vector<double>(4, 0.0));
}

TEST_CASE("discretize threshold mapping") {
    const SAXConfig cfg3(3, 3, 3);
    CHECK(discretize({-1.0, 0.1, 1.0}, cfg3).str() == "abc");

    const SAXConfig cfg2(4, 4, 2);
    CHECK(discretize({0.0, 0.0, 0.0, 0.0}, cfg2).str() == "bbbb");  // ties map to the upper cell

    const SAXConfig cfg26(2, 2, 26);
    const double below = breakpoints(26).front() - 1.0;
    CHECK(discretize({below, below}, cfg26).str() == "aa");
}

TEST_CASE("discretize is monotone in each coordinate") {
    Rng rng(11);
    for (int alpha = 2; alpha <= 8; ++alpha) {
        const SAXConfig cfg(4, 4, alpha);
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> v(4);
            for (double& x : v) x = rng.uniform(-2.5, 2.5);
            const auto w1 = discretize(v, cfg);
            const std::size_t k = rng.uniform_index(4);
            v[k] += rng.uniform(0.0, 1.5);
            const auto w2 = discretize(v, cfg);
            for (std::size_t i = 0; i < 4; ++i) {
                if (i == k)
                    CHECK(w2.cell(i) >= w1.cell(i));
                else
                    CHECK(w2.cell(i) == w1.cell(i));
            }
        }
    }
}

TEST_CASE("sax_transform composition") {
    SUBCASE("flat window, alpha 4") {
        const SAXConfig cfg(6, 3, 4);
        const auto [word, nw] = sax_transform(std::vector<double>(6, 3.25), cfg);
        CHECK(word.str() == "ccc");  // zero maps up at the middle breakpoint
        for (double v : nw.values) CHECK(v == 0.0);
    }
    SUBCASE("step window") {
        const SAXConfig cfg(4, 2, 3);
        const auto [word, nw] = sax_transform(std::vector<double>{0.0, 0.0, 10.0, 10.0}, cfg);
        CHECK(word.str() == "ac");
        CHECK(nw.values[0] == doctest::Approx(-1.0));
        CHECK(nw.values[3] == doctest::Approx(1.0));
    }
    SUBCASE("determinism") {
        const SAXConfig cfg(8, 4, 5);
        const std::vector<double> raw = {0.5, 1.5, -2.0, 0.25, 9.0, -3.5, 2.0, 0.0};
        const auto a = sax_transform(raw, cfg);
        const auto b = sax_transform(raw, cfg);
        CHECK(a.first == b.first);
        CHECK(a.second.values == b.second.values);
    }
}

TEST_CASE("mindist examples") {
    const SAXConfig cfg(4, 2, 3);
    SUBCASE("identical words") {
        const SAXConfig c3(3, 3, 3);
        CHECK(mindist(SAXWord("abc"), SAXWord("abc"), c3) == 0.0);
    }
    SUBCASE("adjacent symbols contribute nothing") {
        CHECK(mindist(SAXWord("ab"), SAXWord("bc"), cfg) == 0.0);
    }
    SUBCASE("non-adjacent symbols use breakpoint separation") {
        // each position: gap = beta_2 - beta_1 for alpha = 3
        const double gap = 0.4307272992954576 * 2.0;
        const double expected = std::sqrt(2.0) * std::sqrt(2.0 * gap * gap);
        CHECK(mindist(SAXWord("ac"), SAXWord("ca"), cfg) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(mindist(SAXWord("ac"), SAXWord("ca"), cfg) == doctest::Approx(1.7228).epsilon(1e-3));
    }
    SUBCASE("mismatched lengths rejected") {
        CHECK_THROWS_AS(mindist(SAXWord("ab"), SAXWord("abc"), cfg), ConfigMismatchError);
        CHECK_THROWS_AS(mindist(SAXWord("ad"), SAXWord("aa"), cfg), ConfigMismatchError);  // 'd' outside alpha=3
    }
}

TEST_CASE("mindist is symmetric and non-negative") {
    Rng rng(13);
    for (int rep = 0; rep < 500; ++rep) {
        const int alpha = 2 + static_cast<int>(rng.uniform_index(9));
        const int l = 1 + static_cast<int>(rng.uniform_index(6));
        const SAXConfig cfg(l * 2, l, alpha);
        std::string a(static_cast<std::size_t>(l), 'a'), b(static_cast<std::size_t>(l), 'a');
        for (int i = 0; i < l; ++i) {
            a[static_cast<std::size_t>(i)] = static_cast<char>('a' + rng.uniform_index(static_cast<std::uint64_t>(alpha)));
            b[static_cast<std::size_t>(i)] = static_cast<char>('a' + rng.uniform_index(static_cast<std::uint64_t>(alpha)));
        }
        const SAXWord wa(a), wb(b);
        const double ab = mindist(wa, wb, cfg);
        CHECK(ab >= 0.0);
        CHECK(ab == mindist(wb, wa, cfg));
        CHECK(mindist(wa, wa, cfg) == 0.0);
    }
}

TEST_CASE("mindist lower-bounds euclidean distance of z-normalized windows") {
    Rng rng(17);
    for (int alpha = 2; alpha <= 10; ++alpha) {
        const SAXConfig cfg(32, 8, alpha);
        for (int rep = 0; rep < 120; ++rep) {
            std::vector<double> a(32), b(32);
            double wa = 0.0, wb = 0.0;
            for (int i = 0; i < 32; ++i) {
                wa += rng.gaussian();
                wb += rng.gaussian();
                a[static_cast<std::size_t>(i)] = wa;
                b[static_cast<std::size_t>(i)] = rep % 7 == 0 ? 4.0 : wb;  // occasionally flat
            }
            const auto [awd, anw] = sax_transform(a, cfg);
            const auto [bwd, bnw] = sax_transform(b, cfg);
            const double ed = oracles::naive_euclidean(anw.values, bnw.values);
            CHECK(mindist(awd, bwd, cfg) <= ed + 1e-9);
        }
    }
}

TEST_CASE("mindist_envelope examples") {
    SUBCASE("query inside the envelope") {
        const SAXConfig cfg(4, 2, 4);
        SymbolEnvelope env;
        env.lo = "ab";
        env.hi = "cd";
        CHECK(mindist_envelope(SAXWord("bc"), env, cfg) == 0.0);
    }
    SUBCASE("degenerate envelope equals mindist") {
        const SAXConfig cfg(8, 2, 5);
        const SAXWord member("ce");
        const SymbolEnvelope env = SymbolEnvelope::of(member);
        for (const char* qs : {"aa", "ce", "ea", "bd"}) {
            const SAXWord q(qs);
            CHECK(mindist_envelope(q, env, cfg) == doctest::Approx(mindist(q, member, cfg)));
        }
    }
    SUBCASE("outside by more than one cell") {
        const SAXConfig cfg(4, 2, 4);
        SymbolEnvelope env;
        env.lo = "cc";
        env.hi = "dd";
        const double gap = 0.6744897501960817;  // beta_2 - beta_1 for alpha = 4
        const double expected = std::sqrt(2.0) * std::sqrt(2.0 * gap * gap);
        CHECK(mindist_envelope(SAXWord("aa"), env, cfg) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(mindist_envelope(SAXWord("aa"), env, cfg) == doctest::Approx(1.3490).epsilon(1e-3));
    }
    SUBCASE("invalid envelope rejected") {
        const SAXConfig cfg(4, 2, 4);
        SymbolEnvelope env;
        env.lo = "dd";
        env.hi = "aa";
        CHECK_THROWS_AS(mindist_envelope(SAXWord("aa"), env, cfg), std::invalid_argument);
    }
}

TEST_CASE("envelope lower-bounds mindist to every covered member") {
    Rng rng(19);
    for (const auto& [alpha, l] : std::vector<std::pair<int, int>>{{3, 2}, {4, 2}, {3, 3}}) {
        const SAXConfig cfg(l * 2, l, alpha);
        const auto universe = oracles::enumerate_universe(alpha, l);
        for (int rep = 0; rep < 30; ++rep) {
            const std::size_t count = 1 + rng.uniform_index(5);
            std::vector<SAXWord> members;
            SymbolEnvelope env;
            for (std::size_t k = 0; k < count; ++k) {
                members.emplace_back(universe[rng.uniform_index(universe.size())]);
                env.expand(members.back());
            }
            for (const auto& qs : universe) {
                const SAXWord q(qs);
                double best = std::numeric_limits<double>::infinity();
                for (const auto& m : members) best = std::min(best, mindist(q, m, cfg));
                CHECK(mindist_envelope(q, env, cfg) <= best + 1e-12);
            }
        }
    }
}

TEST_SUITE_END();
