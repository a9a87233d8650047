#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bstree/errors.hpp"
#include "bstree/prune.hpp"
#include "bstree/query.hpp"
#include "bstree/rng.hpp"
#include "bstree/stream.hpp"
#include "bstree/tree.hpp"

namespace bstree {

struct ExperimentConfig {
    std::string dataset;                           // file path; empty selects the synthetic stream
    SynthKind synthetic = SynthKind::random_walk;  // used when dataset is empty
    int tw = 512;                                  // basic window size (= w)
    int nw = 3600;                                 // number of windows to process
    int slide = 0;                                 // 0 means tumbling (slide = tw)
    int word_len = 8;
    std::vector<int> alphas = {4, 6, 8};
    int order = 32;
    std::uint64_t mbr_capacity = 64;
    int htree = 8;
    std::uint64_t tmp_th = 1;
    PruneMode prune_mode = PruneMode::absolute;
    std::vector<double> radii = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    QueryMode mode = QueryMode::approximate;
    int query_count = 100;
    std::uint64_t rng_seed = 42;
    std::string out;  // output base path for the CLI
    bool drop_first_column = false;

    // workload shape (the paper-style experiments leave this to the harness)
    double noise_sigma = 0.02;     // query noise, relative to the source window's stddev
    double random_fraction = 0.0;  // share of pure-random query patterns
    double concentrate = 0.0;      // >0: draw query patterns from this leading fraction of windows
    int warm_passes = 1;           // touching passes over the warm query set before measuring
    bool timing_wall = false;      // true: report wall-clock mean_query_us (not reproducible)
    std::uint64_t archive_capacity = 0;  // 0: keep all nw windows

    int effective_slide() const { return slide == 0 ? tw : slide; }
    std::uint64_t required_points() const {
        return static_cast<std::uint64_t>(nw - 1) * static_cast<std::uint64_t>(effective_slide()) +
               static_cast<std::uint64_t>(tw);
    }
};

struct ReportRow {
    int alpha = 0;
    double radius = 0.0;
    bool post_prune = false;
    double precision = 0.0;
    double recall = 0.0;
    double mean_query_us = 0.0;
    int index_height = 0;
    std::uint64_t element_count = 0;
};

struct ExperimentReport {
    std::vector<std::string> header;  // comment lines echoing config and workload
    std::vector<ReportRow> rows;
    std::vector<std::pair<int, PruneReport>> prune_events;  // tagged with alpha
};

// Brute-force oracle: distance of the pattern to every live archived window.
inline std::vector<std::pair<std::uint64_t, double>> ground_truth_distances(const WindowArchive& archive,
                                                                            std::span<const double> pattern,
                                                                            const SAXConfig& cfg) {
    const NormalizedWindow qn = znormalize(pattern, cfg);
    std::vector<std::pair<std::uint64_t, double>> out;
    archive.for_each([&](const WindowRecord& rec) {
        out.emplace_back(rec.window_id, euclidean(qn.values, rec.normalized.values));
    });
    return out;
}

inline std::vector<std::uint64_t> ground_truth(const WindowArchive& archive, std::span<const double> pattern,
                                               double r, const SAXConfig& cfg) {
    std::vector<std::uint64_t> out;
    for (const auto& [id, d] : ground_truth_distances(archive, pattern, cfg))
        if (d <= r) out.push_back(id);
    return out;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

inline double population_std(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        const double d = x - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt6(v[i]);
    }
    return s;
}

inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.tw <= 0 || cfg.nw <= 0 || cfg.word_len <= 0 || cfg.query_count <= 0)
        throw std::invalid_argument("tw, nw, word length and query count must be positive");
    const int slide = cfg.effective_slide();
    if (slide < 1 || slide > cfg.tw) throw std::invalid_argument("slide must lie in [1, tw]");
    if (cfg.alphas.empty()) throw std::invalid_argument("at least one alphabet size is required");
    if (cfg.radii.empty()) throw std::invalid_argument("at least one radius is required");
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
        if (!(cfg.radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
        if (i > 0 && !(cfg.radii[i - 1] < cfg.radii[i])) throw std::invalid_argument("radii must be sorted ascending");
    }
    if (cfg.noise_sigma < 0.0 || cfg.random_fraction < 0.0 || cfg.random_fraction > 1.0 || cfg.concentrate < 0.0 ||
        cfg.concentrate > 1.0)
        throw std::invalid_argument("workload parameters out of range");
    if (cfg.warm_passes < 0) throw std::invalid_argument("warm passes must be >= 0");
}

// Runs the full experiment: per alphabet size, build the index over nw windows, warm
// it with touching queries, measure precision/recall per radius just before a forced
// prune and again just after. Measurement queries run read-only so they do not refresh
// timestamps between the two phases. Deterministic for a fixed seed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int slide = cfg.effective_slide();
    const std::uint64_t required = cfg.required_points();

    std::vector<double> data;
    if (!cfg.dataset.empty()) {
        data = parse_stream_file(cfg.dataset, cfg.drop_first_column);
        if (data.size() < required)
            throw DataError("dataset too short: need " + std::to_string(required) + " points for " +
                            std::to_string(cfg.nw) + " windows (tw=" + std::to_string(cfg.tw) +
                            ", slide=" + std::to_string(slide) + "), have " + std::to_string(data.size()));
        data.resize(required);
    } else {
        data = synth_stream(cfg.synthetic, required, detail::mix_seed(cfg.rng_seed, 0));
    }

    // Query workload, shared verbatim across alphabet sizes.
    Rng qrng(detail::mix_seed(cfg.rng_seed, 1));
    const std::uint64_t pool =
        cfg.concentrate > 0.0
            ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cfg.concentrate * cfg.nw))
            : static_cast<std::uint64_t>(cfg.nw);
    auto make_pattern = [&]() -> std::vector<double> {
        std::vector<double> p(static_cast<std::size_t>(cfg.tw));
        if (cfg.random_fraction > 0.0 && qrng.uniform() < cfg.random_fraction) {
            double v = 0.0;
            for (auto& x : p) {
                v += qrng.gaussian();
                x = v;
            }
            return p;
        }
        const std::uint64_t id = qrng.uniform_index(pool);
        const std::size_t base = static_cast<std::size_t>(id) * static_cast<std::size_t>(slide);
        const std::span<const double> slice(data.data() + base, static_cast<std::size_t>(cfg.tw));
        const double sigma = cfg.noise_sigma * detail::population_std(slice);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = slice[i] + sigma * qrng.gaussian();
        return p;
    };
    std::vector<std::vector<double>> warm_patterns;
    for (int pass = 0; pass < cfg.warm_passes; ++pass)
        for (int i = 0; i < cfg.query_count; ++i) warm_patterns.push_back(make_pattern());
    std::vector<std::vector<double>> measure_patterns;
    for (int i = 0; i < cfg.query_count; ++i) measure_patterns.push_back(make_pattern());

    ExperimentReport report;
    report.header.push_back("# bstree bench report");
    report.header.push_back("# dataset=" + (cfg.dataset.empty()
                                                ? std::string("synthetic:") +
                                                      (cfg.synthetic == SynthKind::random_walk ? "walk" : "sine")
                                                : cfg.dataset) +
                            " tw=" + std::to_string(cfg.tw) + " nw=" + std::to_string(cfg.nw) +
                            " slide=" + std::to_string(slide) + " word_len=" + std::to_string(cfg.word_len));
    report.header.push_back("# order=" + std::to_string(cfg.order) + " mbr_cap=" + std::to_string(cfg.mbr_capacity) +
                            " htree=" + std::to_string(cfg.htree) + " tmpth=" + std::to_string(cfg.tmp_th) +
                            " prune_mode=" +
                            (cfg.prune_mode == PruneMode::absolute ? std::string("absolute") : std::string("relative-age")));
    report.header.push_back("# alphas=" + detail::join_ints(cfg.alphas) + " radii=" + detail::join_doubles(cfg.radii) +
                            " mode=" + (cfg.mode == QueryMode::approximate ? std::string("approximate") : std::string("exact")) +
                            " queries=" + std::to_string(cfg.query_count) + " seed=" + std::to_string(cfg.rng_seed));
    report.header.push_back("# workload: archived-window patterns + gaussian noise sigma_rel=" +
                            detail::fmt6(cfg.noise_sigma) + " random_fraction=" + detail::fmt6(cfg.random_fraction) +
                            " concentrate=" + detail::fmt6(cfg.concentrate) + " (pool=" + std::to_string(pool) +
                            " windows) warm_passes=" + std::to_string(cfg.warm_passes) +
                            "; measurement queries are read-only; one forced prune between phases");

    for (int alpha : cfg.alphas) {
        const SAXConfig scfg(cfg.tw, cfg.word_len, alpha);
        WindowArchive archive(cfg.archive_capacity == 0 ? static_cast<std::uint64_t>(cfg.nw) : cfg.archive_capacity);
        BSTree tree(scfg, TreeParams{cfg.order, cfg.mbr_capacity, cfg.htree, cfg.tmp_th});
        FeatureSource src(data, WindowSpec(cfg.tw, slide), scfg, &archive);
        BuildStats stats =
            build_index(tree, [&] { return src.next(); }, cfg.htree, cfg.tmp_th, cfg.prune_mode);
        for (const PruneReport& r : stats.prunes) report.prune_events.emplace_back(alpha, r);

        // Oracle distances for the measurement set; the archive does not change below.
        std::vector<std::vector<std::pair<std::uint64_t, double>>> truth_dist;
        truth_dist.reserve(measure_patterns.size());
        for (const auto& p : measure_patterns) truth_dist.push_back(ground_truth_distances(archive, p, scfg));

        for (const auto& p : warm_patterns) {
            RangeQuery warm{p, cfg.radii.back(), QueryMode::approximate};
            range_search(tree, warm, scfg, archive, SearchOptions{true});
        }

        auto measure = [&](bool post) {
            for (double r : cfg.radii) {
                double psum = 0.0, rsum = 0.0, us = 0.0;
                for (std::size_t qi = 0; qi < measure_patterns.size(); ++qi) {
                    RangeQuery rq{measure_patterns[qi], r, cfg.mode};
                    QueryResult res = range_search(tree, rq, scfg, archive, SearchOptions{false});
                    const std::vector<std::uint64_t> ids =
                        cfg.mode == QueryMode::exact ? res.matches : res.candidate_ids();
                    std::vector<std::uint64_t> truth;
                    for (const auto& [id, d] : truth_dist[qi])
                        if (d <= r) truth.push_back(id);
                    const auto [prec, rec] = precision_recall(ids, truth);
                    psum += prec;
                    rsum += rec;
                    us += static_cast<double>(res.elapsed.count());
                }
                const double q = static_cast<double>(measure_patterns.size());
                report.rows.push_back(ReportRow{alpha, r, post, psum / q, rsum / q,
                                                cfg.timing_wall ? us / q : 0.0, tree.height(),
                                                tree.element_count()});
            }
        };

        measure(false);
        const PruneReport forced = lrv_prune(tree, cfg.tmp_th, cfg.prune_mode);
        report.prune_events.emplace_back(alpha, forced);
        measure(true);
    }
    return report;
}

inline void write_report_csv(const ExperimentReport& report, std::ostream& os) {
    for (const std::string& h : report.header) os << h << "\n";
    os << "alpha,radius,phase,precision,recall,mean_query_us,index_height,element_count\n";
    for (const ReportRow& r : report.rows) {
        os << r.alpha << "," << detail::fmt6(r.radius) << "," << (r.post_prune ? "post-prune" : "pre-prune") << ","
           << detail::fmt6(r.precision) << "," << detail::fmt6(r.recall) << "," << detail::fmt3(r.mean_query_us)
           << "," << r.index_height << "," << r.element_count << "\n";
    }
}

inline void write_prune_csv(const ExperimentReport& report, std::ostream& os) {
    os << "alpha," << PruneReport::csv_header << "\n";
    for (const auto& [alpha, rep] : report.prune_events) os << alpha << "," << rep.csv_row() << "\n";
}

// Plot-ready projections: precision vs radius for both phases at the first alphabet
// size, and precision vs radius across alphabet sizes for the post-prune phase.
inline void emit_plot_data(const ExperimentReport& report, const std::string& base_path) {
    const std::string fig1 = base_path + ".fig1.csv";
    const std::string fig2 = base_path + ".fig2.csv";
    std::ofstream f1(fig1);
    if (!f1) throw DataError("cannot write " + fig1);
    std::ofstream f2(fig2);
    if (!f2) throw DataError("cannot write " + fig2);

    f1 << "alpha,radius,phase,precision,recall\n";
    f2 << "alpha,radius,phase,precision,recall\n";
    const int first_alpha = report.rows.empty() ? 0 : report.rows.front().alpha;
    for (const ReportRow& r : report.rows) {
        const std::string line = std::to_string(r.alpha) + "," + detail::fmt6(r.radius) + "," +
                                 (r.post_prune ? "post-prune" : "pre-prune") + "," + detail::fmt6(r.precision) +
                                 "," + detail::fmt6(r.recall) + "\n";
        if (r.alpha == first_alpha) f1 << line;
        if (r.post_prune) f2 << line;
    }
}

}  // namespace bstree
