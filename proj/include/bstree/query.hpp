#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "bstree/prune.hpp"
#include "bstree/stream.hpp"
#include "bstree/tree.hpp"

namespace bstree {

enum class QueryMode { approximate, exact };

struct RangeQuery {
    std::vector<double> pattern;  // raw values, length w; z-normalized before matching
    double radius = 0.0;          // Euclidean radius in z-normalized space
    QueryMode mode = QueryMode::approximate;
};

struct CandidateWord {
    SAXWord word;
    std::vector<std::uint64_t> postings;
};

struct QueryResult {
    std::vector<std::uint64_t> matches;       // exact mode: verified window ids, sorted
    std::vector<CandidateWord> candidates;    // words admitted by the mindist test
    std::vector<std::uint64_t> unverifiable;  // candidate ids evicted from the archive
    std::uint64_t candidates_examined = 0;    // member words distance-tested
    std::uint64_t nodes_visited = 0;
    std::chrono::microseconds elapsed{0};

    // Sorted-unique union of candidate postings; the approximate-mode answer set.
    std::vector<std::uint64_t> candidate_ids() const {
        std::vector<std::uint64_t> ids;
        for (const CandidateWord& c : candidates) ids.insert(ids.end(), c.postings.begin(), c.postings.end());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }
};

struct SearchOptions {
    bool touch = true;  // false: read-only analytics query, leaves clock and ts alone
};

// Range similarity search. The pattern is z-normalized and SAX-transformed; elements
// whose envelope lower bound clears the radius are visited (and touched), their member
// words filtered by mindist. Exact mode verifies candidate windows against the archive
// in z-normalized Euclidean distance; evicted windows are reported as unverifiable.
inline QueryResult range_search(BSTree& tree, const RangeQuery& q, const SAXConfig& cfg,
                                const WindowArchive& archive, SearchOptions opt = {}) {
    if (!cfg.compatible(tree.config()))
        throw ConfigMismatchError("query configuration does not match the tree's configuration");
    if (static_cast<int>(q.pattern.size()) != cfg.w)
        throw std::invalid_argument("query pattern length " + std::to_string(q.pattern.size()) +
                                    " does not match window length " + std::to_string(cfg.w));
    if (!std::isfinite(q.radius) || q.radius < 0.0) throw std::invalid_argument("query radius must be finite and >= 0");

    const auto t0 = std::chrono::steady_clock::now();
    QueryResult res;
    if (opt.touch) tree.begin_query_visit();
    if (tree.empty()) {
        res.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
        return res;
    }

    auto [qword, qnorm] = sax_transform(q.pattern, cfg);

    struct Walker {
        BSTree& tree;
        const SAXConfig& cfg;
        const SAXWord& qword;
        double radius;
        bool touch_elements;
        QueryResult& res;

        void walk(BSTree::Node* n) {
            ++res.nodes_visited;
            for (MBR& e : n->elements) {
                if (mindist_envelope(qword, e.envelope, cfg) > radius) continue;
                if (touch_elements) touch(e, tree.clock());
                for (const MBRMember& m : e.members) {
                    ++res.candidates_examined;
                    if (mindist(qword, m.word, cfg) <= radius) res.candidates.push_back({m.word, m.postings});
                }
            }
            for (auto& c : n->children) walk(c.get());
        }
    };
    Walker walker{tree, cfg, qword, q.radius, opt.touch, res};
    walker.walk(tree.root_node());

    if (q.mode == QueryMode::exact) {
        WindowRecord rec;
        for (const CandidateWord& c : res.candidates) {
            for (std::uint64_t id : c.postings) {
                switch (archive.lookup(id, rec)) {
                    case WindowArchive::Lookup::found:
                        if (euclidean(qnorm.values, rec.normalized.values) <= q.radius) res.matches.push_back(id);
                        break;
                    case WindowArchive::Lookup::evicted:
                    case WindowArchive::Lookup::unknown:
                        res.unverifiable.push_back(id);
                        break;
                }
            }
        }
        std::sort(res.matches.begin(), res.matches.end());
        std::sort(res.unverifiable.begin(), res.unverifiable.end());
    }

    res.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
    return res;
}

// Precision/recall against a brute-force truth set. Empty result yields precision 1,
// empty truth yields recall 1. Inputs must be sorted and duplicate-free.
inline std::pair<double, double> precision_recall(const std::vector<std::uint64_t>& result,
                                                  const std::vector<std::uint64_t>& truth) {
    std::size_t inter = 0;
    auto a = result.begin();
    auto b = truth.begin();
    while (a != result.end() && b != truth.end()) {
        if (*a < *b)
            ++a;
        else if (*b < *a)
            ++b;
        else {
            ++inter;
            ++a;
            ++b;
        }
    }
    const double precision = result.empty() ? 1.0 : static_cast<double>(inter) / static_cast<double>(result.size());
    const double recall = truth.empty() ? 1.0 : static_cast<double>(inter) / static_cast<double>(truth.size());
    return {precision, recall};
}

}  // namespace bstree
