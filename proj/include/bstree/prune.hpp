#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bstree/stream.hpp"
#include "bstree/tree.hpp"

namespace bstree {

// Query-time visit: stamps the element with the current clock value.
inline void touch(MBR& element, const VisitClock& clock) { element.ts = clock.counter; }

struct PruneReport {
    std::uint64_t clock_at_prune = 0;
    std::uint64_t elements_visited = 0;
    std::uint64_t elements_kept = 0;
    std::uint64_t elements_pruned = 0;
    std::uint64_t bridges_kept = 0;
    int old_height = 0;
    int new_height = 0;

    static constexpr const char* csv_header = "clock,visited,kept,pruned,bridges,old_height,new_height";

    std::string csv_row() const {
        return std::to_string(clock_at_prune) + "," + std::to_string(elements_visited) + "," +
               std::to_string(elements_kept) + "," + std::to_string(elements_pruned) + "," +
               std::to_string(bridges_kept) + "," + std::to_string(old_height) + "," + std::to_string(new_height);
    }
};

// How ts is compared against the threshold: as an absolute clock value, or as an age
// relative to the current clock.
enum class PruneMode { absolute, relative_age };

inline bool ts_is_fresh(std::uint64_t ts, std::uint64_t tmp_th, PruneMode mode, std::uint64_t clock) {
    if (mode == PruneMode::absolute) return ts >= tmp_th;
    return ts >= clock || clock - ts <= tmp_th;
}

// Least-recently-visited pruning. Walks the depth-first element sequence left to
// right; an element survives when its ts clears the threshold, or as a bridge when
// its ts is below both the threshold and its successor's ts (the last element has no
// successor and cannot bridge). Kept elements are reinserted in sequence order into a
// fresh tree that replaces the old one; all timestamps and the clock reset to zero.
inline PruneReport lrv_prune(BSTree& tree, std::uint64_t tmp_th, PruneMode mode = PruneMode::absolute) {
    PruneReport rep;
    rep.clock_at_prune = tree.clock().counter;
    rep.old_height = tree.height();

    const std::uint64_t clock_now = tree.clock().counter;
    std::vector<MBR> seq = tree.extract_all_elements();
    rep.elements_visited = seq.size();

    BSTree fresh(tree.config(), tree.params());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const bool is_fresh = ts_is_fresh(seq[i].ts, tmp_th, mode, clock_now);
        const bool bridge = !is_fresh && i + 1 < seq.size() && seq[i].ts < seq[i + 1].ts;
        if (!is_fresh && !bridge) continue;
        seq[i].ts = 0;
        fresh.index_insert(std::move(seq[i]));
        ++rep.elements_kept;
        if (bridge) ++rep.bridges_kept;
    }
    rep.elements_pruned = rep.elements_visited - rep.elements_kept;
    fresh.reset_clock();
    tree = std::move(fresh);
    rep.new_height = tree.height();
    return rep;
}

struct BuildStats {
    std::uint64_t features_consumed = 0;
    std::vector<PruneReport> prunes;
    std::uint64_t escape_hatch_fires = 0;
};

struct NullBuildObserver {
    void operator()(const BSTree&, const PruneReport*) const {}
};

// Incremental build loop: insert features while the height stays within htree; once
// it is exceeded, prune and resume. If a prune leaves the height above htree the
// effective bound is raised by one for the next cycle so the loop keeps consuming.
// The observer runs at every loop boundary, after the insert and any prune.
template <class Source, class Observer = NullBuildObserver>
BuildStats build_index(BSTree& tree, Source&& next_feature, int htree, std::uint64_t tmp_th,
                       PruneMode mode = PruneMode::absolute, std::ostream* warnings = nullptr,
                       Observer&& observe = Observer{}) {
    if (htree < 1) throw std::invalid_argument("htree must be at least 1");
    BuildStats stats;
    int effective = htree;
    for (;;) {
        std::optional<StreamFeature> f = next_feature();
        if (!f) break;
        tree.insert_feature(f->word, f->record.window_id);
        ++stats.features_consumed;
        const PruneReport* fired = nullptr;
        PruneReport rep;
        if (tree.height() > effective) {
            rep = lrv_prune(tree, tmp_th, mode);
            stats.prunes.push_back(rep);
            fired = &rep;
            if (tree.height() > htree) {
                ++stats.escape_hatch_fires;
                effective = htree + 1;
                if (warnings)
                    *warnings << "bstree: prune left height " << tree.height() << " above htree " << htree
                              << "; raising effective bound to " << effective << " for this cycle\n";
            } else {
                effective = htree;
            }
        }
        observe(static_cast<const BSTree&>(tree), fired);
    }
    return stats;
}

}  // namespace bstree
