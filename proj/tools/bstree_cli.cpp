// bstree: build, query and benchmark a SAX-word B-tree index over data streams.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bstree/bstree.hpp"

namespace {

struct CommonOpts {
    std::string dataset;
    std::string synthetic = "walk";
    int tw = 512;
    int nw = 3600;
    int slide = 0;
    int word_len = 8;
    std::string alpha = "4";
    int order = 32;
    std::uint64_t mbr_cap = 64;
    int htree = 8;
    std::uint64_t tmpth = 1;
    std::string radii = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    std::string mode = "approximate";
    int queries = 100;
    std::uint64_t seed = 42;
    std::string out;
    bool drop_first_column = false;
    std::string prune_mode = "absolute";
    std::uint64_t archive_cap = 0;
    double noise_sigma = 0.02;
    double random_fraction = 0.0;
    double concentrate = 0.0;
    int warm_passes = 1;
    bool timing_wall = false;
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "key=value config file, overridable by flags");
    cmd->add_option("--dataset", o.dataset, "stream file (one or more reals per line)");
    cmd->add_option("--synthetic", o.synthetic, "synthetic stream when no dataset is given")
        ->check(CLI::IsMember({"walk", "sine"}));
    cmd->add_option("--tw", o.tw, "basic window size w");
    cmd->add_option("--nw", o.nw, "number of windows to process");
    cmd->add_option("--slide", o.slide, "window slide, default tumbling (= tw)");
    cmd->add_option("--word-len", o.word_len, "SAX word length (must divide tw)");
    cmd->add_option("--alpha", o.alpha, "alphabet size, or comma list for bench");
    cmd->add_option("--order", o.order, "B-tree order m");
    cmd->add_option("--mbr-cap", o.mbr_cap, "MBR capacity c");
    cmd->add_option("--htree", o.htree, "maximum tree height before pruning");
    cmd->add_option("--tmpth", o.tmpth, "LRV pruning threshold tmpTh");
    cmd->add_option("--radii", o.radii, "comma list of query radii");
    cmd->add_option("--mode", o.mode, "query mode")->check(CLI::IsMember({"approximate", "exact"}));
    cmd->add_option("--queries", o.queries, "workload query count");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "output path");
    cmd->add_flag("--drop-first-column", o.drop_first_column, "drop the first value of each dataset line");
    cmd->add_option("--prune-mode", o.prune_mode, "timestamp comparison")
        ->check(CLI::IsMember({"absolute", "relative-age"}));
    cmd->add_option("--archive-cap", o.archive_cap, "archive capacity in windows (0 = keep all)");
    cmd->add_option("--noise-sigma", o.noise_sigma, "bench query noise, relative to window stddev");
    cmd->add_option("--random-fraction", o.random_fraction, "bench share of pure-random queries");
    cmd->add_option("--concentrate", o.concentrate, "bench: draw queries from this leading window fraction");
    cmd->add_option("--warm-passes", o.warm_passes, "bench touching passes before measurement");
    cmd->add_flag("--timing", o.timing_wall, "report wall-clock query times (not reproducible)");
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

// Plain key=value config file; '#' starts a comment. Keys use the flag names without
// the leading dashes; values given on the command line take precedence because the
// file is applied before CLI11 parses the flags.
void apply_config_file(CommonOpts& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bstree::DataError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r\n");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r\n");
            return s.substr(a, b - a + 1);
        };
        if (strip(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw bstree::ParseError("config line is not key=value", lineno);
        std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        for (auto& ch : key)
            if (ch == '_') ch = '-';

        try {
            if (key == "dataset") o.dataset = val;
            else if (key == "synthetic") o.synthetic = val;
            else if (key == "tw") o.tw = std::stoi(val);
            else if (key == "nw") o.nw = std::stoi(val);
            else if (key == "slide") o.slide = std::stoi(val);
            else if (key == "word-len") o.word_len = std::stoi(val);
            else if (key == "alpha") o.alpha = val;
            else if (key == "order") o.order = std::stoi(val);
            else if (key == "mbr-cap") o.mbr_cap = std::stoull(val);
            else if (key == "htree") o.htree = std::stoi(val);
            else if (key == "tmpth") o.tmpth = std::stoull(val);
            else if (key == "radii") o.radii = val;
            else if (key == "mode") o.mode = val;
            else if (key == "queries") o.queries = std::stoi(val);
            else if (key == "seed") o.seed = std::stoull(val);
            else if (key == "out") o.out = val;
            else if (key == "drop-first-column") o.drop_first_column = parse_bool(val);
            else if (key == "prune-mode") o.prune_mode = val;
            else if (key == "archive-cap") o.archive_cap = std::stoull(val);
            else if (key == "noise-sigma") o.noise_sigma = std::stod(val);
            else if (key == "random-fraction") o.random_fraction = std::stod(val);
            else if (key == "concentrate") o.concentrate = std::stod(val);
            else if (key == "warm-passes") o.warm_passes = std::stoi(val);
            else if (key == "timing") o.timing_wall = parse_bool(val);
            else throw std::invalid_argument("unknown config key '" + key + "'");
        } catch (const bstree::ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

// The config file must be applied before CLI11 assigns flag values, so the path is
// pre-scanned from argv.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

bstree::SynthKind synth_kind(const std::string& s) {
    return s == "sine" ? bstree::SynthKind::sine_with_noise : bstree::SynthKind::random_walk;
}

bstree::PruneMode prune_mode(const std::string& s) {
    return s == "relative-age" ? bstree::PruneMode::relative_age : bstree::PruneMode::absolute;
}

std::string strip_csv_suffix(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return path.substr(0, path.size() - 4);
    return path;
}

std::vector<double> load_points(const CommonOpts& o, std::uint64_t required) {
    if (!o.dataset.empty()) {
        auto data = bstree::parse_stream_file(o.dataset, o.drop_first_column);
        if (data.size() < required)
            throw bstree::DataError("dataset too short: need " + std::to_string(required) + " points, have " +
                                    std::to_string(data.size()));
        data.resize(required);
        return data;
    }
    return bstree::synth_stream(synth_kind(o.synthetic), required,
                                bstree::detail::mix_seed(o.seed, 0));
}

struct BuiltIndex {
    bstree::SAXConfig cfg;
    bstree::WindowArchive archive;
    bstree::BSTree tree;
    bstree::BuildStats stats;

    BuiltIndex(const CommonOpts& o, int alpha)
        : cfg(o.tw, o.word_len, alpha),
          archive(o.archive_cap == 0 ? static_cast<std::uint64_t>(o.nw) : o.archive_cap),
          tree(cfg, bstree::TreeParams{o.order, o.mbr_cap, o.htree, o.tmpth}) {
        const int slide = o.slide == 0 ? o.tw : o.slide;
        const std::uint64_t required = static_cast<std::uint64_t>(o.nw - 1) * slide + o.tw;
        bstree::FeatureSource src(load_points(o, required), bstree::WindowSpec(o.tw, slide), cfg, &archive);
        stats = bstree::build_index(
            tree, [&] { return src.next(); }, o.htree, o.tmpth, prune_mode(o.prune_mode), &std::cerr);
    }
};

int run_index(const CommonOpts& o, bool dump, const std::string& export_catalog) {
    const int alpha = parse_int_list(o.alpha).at(0);
    BuiltIndex built(o, alpha);

    if (!export_catalog.empty()) {
        std::ofstream out(export_catalog);
        if (!out) throw bstree::DataError("cannot write " + export_catalog);
        built.tree.catalog().export_tsv(out);
    }

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw bstree::DataError("cannot write " + o.out);
        os = &file;
    }
    if (dump) {
        built.tree.dump(*os);
    } else {
        *os << "height: " << built.tree.height() << "\n"
            << "elements: " << built.tree.element_count() << "\n"
            << "distinct_words: " << built.tree.word_count() << "\n"
            << "postings: " << built.tree.posting_count() << "\n"
            << "windows_archived: " << built.archive.size() << "\n"
            << "features: " << built.stats.features_consumed << "\n"
            << "prunes: " << built.stats.prunes.size() << "\n"
            << "escape_hatch_fires: " << built.stats.escape_hatch_fires << "\n";
        if (!built.stats.prunes.empty()) {
            *os << bstree::PruneReport::csv_header << "\n";
            for (const auto& r : built.stats.prunes) *os << r.csv_row() << "\n";
        }
    }
    return 0;
}

// Batch lines: "r<TAB>v1,v2,...,vw"; '#' comments and blank lines skipped.
std::vector<bstree::RangeQuery> parse_batch(const std::string& path, int w, bstree::QueryMode mode) {
    std::ifstream in(path);
    if (!in) throw bstree::DataError("cannot open query batch: " + path);
    std::vector<bstree::RangeQuery> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw bstree::ParseError("expected 'radius<TAB>values'", lineno);
        bstree::RangeQuery q;
        try {
            q.radius = std::stod(line.substr(0, tab));
        } catch (const std::exception&) {
            throw bstree::ParseError("cannot parse radius", lineno);
        }
        std::stringstream vs(line.substr(tab + 1));
        std::string tok;
        while (std::getline(vs, tok, ',')) {
            if (tok.empty()) continue;
            try {
                q.pattern.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw bstree::ParseError("cannot parse value '" + tok + "'", lineno);
            }
        }
        if (static_cast<int>(q.pattern.size()) != w)
            throw bstree::ParseError("query has " + std::to_string(q.pattern.size()) + " values, expected " +
                                         std::to_string(w),
                                     lineno);
        q.mode = mode;
        out.push_back(std::move(q));
    }
    return out;
}

int run_query(const CommonOpts& o, const std::string& batch_path) {
    const int alpha = parse_int_list(o.alpha).at(0);
    const auto mode = o.mode == "exact" ? bstree::QueryMode::exact : bstree::QueryMode::approximate;
    BuiltIndex built(o, alpha);
    const auto batch = parse_batch(batch_path, o.tw, mode);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw bstree::DataError("cannot write " + o.out);
        os = &file;
    }
    *os << "query_index,mode,matches,candidates,nodes_visited,elapsed_us\n";
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto res = bstree::range_search(built.tree, batch[i], built.cfg, built.archive);
        const std::size_t matches =
            mode == bstree::QueryMode::exact ? res.matches.size() : res.candidate_ids().size();
        *os << i << "," << o.mode << "," << matches << "," << res.candidates_examined << "," << res.nodes_visited
            << "," << res.elapsed.count() << "\n";
    }
    return 0;
}

int run_bench(const CommonOpts& o) {
    bstree::ExperimentConfig cfg;
    cfg.dataset = o.dataset;
    cfg.synthetic = synth_kind(o.synthetic);
    cfg.tw = o.tw;
    cfg.nw = o.nw;
    cfg.slide = o.slide;
    cfg.word_len = o.word_len;
    cfg.alphas = parse_int_list(o.alpha);
    cfg.order = o.order;
    cfg.mbr_capacity = o.mbr_cap;
    cfg.htree = o.htree;
    cfg.tmp_th = o.tmpth;
    cfg.prune_mode = prune_mode(o.prune_mode);
    cfg.radii = parse_double_list(o.radii);
    cfg.mode = o.mode == "exact" ? bstree::QueryMode::exact : bstree::QueryMode::approximate;
    cfg.query_count = o.queries;
    cfg.rng_seed = o.seed;
    cfg.drop_first_column = o.drop_first_column;
    cfg.noise_sigma = o.noise_sigma;
    cfg.random_fraction = o.random_fraction;
    cfg.concentrate = o.concentrate;
    cfg.warm_passes = o.warm_passes;
    cfg.timing_wall = o.timing_wall;
    cfg.archive_capacity = o.archive_cap;

    const auto report = bstree::run_experiment(cfg);

    const std::string out_path = o.out.empty() ? "bench_report.csv" : o.out;
    std::ofstream out(out_path);
    if (!out) throw bstree::DataError("cannot write " + out_path);
    bstree::write_report_csv(report, out);
    const std::string base = strip_csv_suffix(out_path);
    bstree::emit_plot_data(report, base);
    std::ofstream prunes(base + ".prunes.csv");
    if (!prunes) throw bstree::DataError("cannot write " + base + ".prunes.csv");
    bstree::write_prune_csv(report, prunes);
    std::cerr << "wrote " << out_path << ", " << base << ".fig1.csv, " << base << ".fig2.csv, " << base
              << ".prunes.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BSTree: incremental SAX/B-tree index for data stream similarity search"};
    app.require_subcommand(1);

    CommonOpts index_opts, query_opts, bench_opts;
    bool dump = false;
    std::string export_catalog, batch_path;

    CLI::App* index_cmd = app.add_subcommand("index", "build an index and print stats");
    add_common(index_cmd, index_opts);
    index_cmd->add_flag("--dump", dump, "print the tree structure instead of stats");
    index_cmd->add_option("--export-catalog", export_catalog, "write the MBR catalog as lo<TAB>hi lines");

    CLI::App* query_cmd = app.add_subcommand("query", "run a batch of range queries");
    add_common(query_cmd, query_opts);
    query_cmd->add_option("--batch", batch_path, "query file: one 'radius<TAB>v1,v2,...' per line")->required();

    CLI::App* bench_cmd = app.add_subcommand("bench", "run the precision/recall experiment");
    add_common(bench_cmd, bench_opts);

    try {
        const std::string config_path = find_config_arg(argc, argv);
        if (!config_path.empty()) {
            apply_config_file(index_opts, config_path);
            apply_config_file(query_opts, config_path);
            apply_config_file(bench_opts, config_path);
        }
    } catch (const bstree::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const bstree::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (index_cmd->parsed()) return run_index(index_opts, dump, export_catalog);
        if (query_cmd->parsed()) return run_query(query_opts, batch_path);
        if (bench_cmd->parsed()) return run_bench(bench_opts);
    } catch (const bstree::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const bstree::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
