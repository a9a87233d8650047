#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bstree/errors.hpp"
#include "bstree/sax.hpp"

namespace bstree {

// One distinct word in an MBR together with the ids of the windows that produced it.
struct MBRMember {
    SAXWord word;
    std::vector<std::uint64_t> postings;
};

// A lexicographic bucket: an inclusive word range [lo, hi] holding up to c distinct
// words sorted ascending, a positionwise symbol envelope over the members, and the
// visit timestamp used by LRV pruning.
struct MBR {
    SAXWord lo;
    SAXWord hi;
    std::vector<MBRMember> members;
    SymbolEnvelope envelope;
    std::uint64_t ts = 0;

    MBR() = default;
    MBR(SAXWord lo_, SAXWord hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {}

    enum class Insert { inserted, duplicate_appended };

    bool covers(const SAXWord& word) const { return lo <= word && word <= hi; }

    // Sorted insertion of a distinct word; a repeated word only extends its postings.
    Insert insert(const SAXWord& word, std::uint64_t window_id) {
        if (!covers(word))
            throw RangeViolationError("word '" + word.str() + "' outside MBR range [" + lo.str() + ".." + hi.str() +
                                      "]");
        auto it = std::lower_bound(members.begin(), members.end(), word,
                                   [](const MBRMember& m, const SAXWord& w) { return m.word < w; });
        if (it != members.end() && it->word == word) {
            it->postings.push_back(window_id);
            return Insert::duplicate_appended;
        }
        MBRMember m;
        m.word = word;
        m.postings.push_back(window_id);
        members.insert(it, std::move(m));
        envelope.expand(word);
        return Insert::inserted;
    }

    const MBRMember* find(const SAXWord& word) const {
        auto it = std::lower_bound(members.begin(), members.end(), word,
                                   [](const MBRMember& m, const SAXWord& w) { return m.word < w; });
        if (it != members.end() && it->word == word) return &*it;
        return nullptr;
    }

    std::size_t member_count() const { return members.size(); }

    std::size_t posting_count() const {
        std::size_t n = 0;
        for (const auto& m : members) n += m.postings.size();
        return n;
    }
};

// Deterministic partition of the full word universe (alpha^l words) into consecutive
// lexicographic ranges of at most c words: range index = floor(rank(word) / c). Range
// bounds are computed with base-alpha digit arithmetic, so the partition never needs
// materializing; export_tsv writes it out for small universes.
class MBRCatalog {
public:
    MBRCatalog(const SAXConfig& cfg, std::uint64_t capacity) : alpha_(cfg.alpha), l_(cfg.l), cap_(capacity) {
        if (cap_ == 0) throw std::invalid_argument("MBR capacity must be at least 1");
    }

    std::uint64_t capacity() const { return cap_; }

    std::pair<SAXWord, SAXWord> lookup(const SAXWord& word) const {
        require(word);
        const std::uint64_t offset = rank_mod(word, cap_);
        SAXWord lo = word_minus(word, offset);
        SAXWord hi = word_plus_clamped(lo, cap_ - 1);
        return {std::move(lo), std::move(hi)};
    }

    SAXWord first_word() const { return SAXWord(std::string(static_cast<std::size_t>(l_), 'a')); }

    SAXWord last_word() const {
        return SAXWord(std::string(static_cast<std::size_t>(l_), static_cast<char>('a' + alpha_ - 1)));
    }

    // alpha^l when it fits in 64 bits.
    std::optional<std::uint64_t> universe_size() const {
        std::uint64_t n = 1;
        for (int i = 0; i < l_; ++i) {
            if (n > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(alpha_))
                return std::nullopt;
            n *= static_cast<std::uint64_t>(alpha_);
        }
        return n;
    }

    // Text lines "lo<TAB>hi" in range order.
    void export_tsv(std::ostream& os, std::uint64_t max_ranges = 10'000'000) const {
        const auto total = universe_size();
        if (!total || (*total + cap_ - 1) / cap_ > max_ranges)
            throw DataError("catalog too large to export");
        SAXWord lo = first_word();
        const SAXWord last = last_word();
        for (;;) {
            const SAXWord hi = word_plus_clamped(lo, cap_ - 1);
            os << lo.str() << '\t' << hi.str() << '\n';
            if (hi == last) break;
            lo = word_plus_clamped(hi, 1);
        }
    }

private:
    int alpha_;
    int l_;
    std::uint64_t cap_;

    void require(const SAXWord& word) const {
        if (static_cast<int>(word.length()) != l_) throw ConfigMismatchError("catalog lookup: word length mismatch");
        for (char ch : word.symbols)
            if (ch < 'a' || ch >= static_cast<char>('a' + alpha_))
                throw ConfigMismatchError("catalog lookup: symbol outside alphabet");
    }

    // rank(word) mod m via Horner's rule; rank is the 0-based lexicographic rank.
    std::uint64_t rank_mod(const SAXWord& word, std::uint64_t m) const {
        unsigned __int128 acc = 0;
        for (char ch : word.symbols) {
            acc = (acc * static_cast<unsigned>(alpha_) + static_cast<unsigned>(ch - 'a')) % m;
        }
        return static_cast<std::uint64_t>(acc);
    }

    SAXWord word_minus(const SAXWord& word, std::uint64_t k) const {
        std::string s = word.symbols;
        int borrow = 0;
        for (int i = l_ - 1; i >= 0; --i) {
            const int sub = static_cast<int>(k % static_cast<std::uint64_t>(alpha_)) + borrow;
            k /= static_cast<std::uint64_t>(alpha_);
            int v = (s[static_cast<std::size_t>(i)] - 'a') - sub;
            if (v < 0) {
                v += alpha_;
                borrow = 1;
            } else {
                borrow = 0;
            }
            s[static_cast<std::size_t>(i)] = static_cast<char>('a' + v);
        }
        if (k != 0 || borrow != 0) throw std::logic_error("catalog word underflow");
        return SAXWord(std::move(s));
    }

    // word + k, clamped to the last word of the universe on overflow.
    SAXWord word_plus_clamped(const SAXWord& word, std::uint64_t k) const {
        std::string s = word.symbols;
        int carry = 0;
        for (int i = l_ - 1; i >= 0; --i) {
            const int add = static_cast<int>(k % static_cast<std::uint64_t>(alpha_)) + carry;
            k /= static_cast<std::uint64_t>(alpha_);
            int v = (s[static_cast<std::size_t>(i)] - 'a') + add;
            if (v >= alpha_) {
                v -= alpha_;
                carry = 1;
            } else {
                carry = 0;
            }
            s[static_cast<std::size_t>(i)] = static_cast<char>('a' + v);
        }
        if (k != 0 || carry != 0) return last_word();
        return SAXWord(std::move(s));
    }
};

struct TreeParams {
    int order = 32;                     // m: max children per node, max m-1 elements
    std::uint64_t mbr_capacity = 64;    // c: max distinct words per MBR
    int max_height = 8;                 // htree
    std::uint64_t prune_threshold = 1;  // tmpTh

    void validate() const {
        if (order < 3) throw std::invalid_argument("tree order must be at least 3");
        if (mbr_capacity == 0) throw std::invalid_argument("MBR capacity must be at least 1");
        if (max_height < 1) throw std::invalid_argument("max height must be at least 1");
    }
};

// Logical visit clock: incremented once per executed query, reset to zero at prune time.
struct VisitClock {
    std::uint64_t counter = 0;
};

// B-tree of order m whose elements are MBRs keyed by their range low bound.
class BSTree {
public:
    struct Node {
        std::vector<MBR> elements;
        std::vector<std::unique_ptr<Node>> children;

        bool leaf() const { return children.empty(); }
    };

    BSTree(SAXConfig cfg, TreeParams params)
        : cfg_(std::move(cfg)), params_(params), catalog_(cfg_, params.mbr_capacity) {
        params_.validate();
    }

    BSTree(BSTree&&) = default;
    BSTree& operator=(BSTree&&) = default;
    BSTree(const BSTree&) = delete;
    BSTree& operator=(const BSTree&) = delete;

    const SAXConfig& config() const { return cfg_; }
    const TreeParams& params() const { return params_; }
    const MBRCatalog& catalog() const { return catalog_; }

    bool empty() const { return root_ == nullptr; }
    int height() const { return height_; }
    std::uint64_t element_count() const { return element_count_; }
    std::uint64_t word_count() const { return word_count_; }
    std::uint64_t posting_count() const { return posting_count_; }

    Node* root_node() { return root_.get(); }
    const Node* root_node() const { return root_.get(); }

    VisitClock& clock() { return clock_; }
    const VisitClock& clock() const { return clock_; }
    std::uint64_t begin_query_visit() { return ++clock_.counter; }
    void reset_clock() { clock_.counter = 0; }

    // Descends by range comparison; returns the element whose [lo, hi] covers the word.
    MBR* find_covering(const SAXWord& word) {
        Node* n = root_.get();
        while (n) {
            const std::size_t idx = descent_index(*n, word);
            if (idx > 0) {
                MBR& e = n->elements[idx - 1];
                if (word <= e.hi) return &e;
            }
            if (n->leaf()) return nullptr;
            n = n->children[idx].get();
        }
        return nullptr;
    }

    const MBR* find_covering(const SAXWord& word) const {
        return const_cast<BSTree*>(this)->find_covering(word);
    }

    // Standard B-tree insertion keyed by mbr.lo; splits promote the median, and the
    // promoted element's ts becomes the max ts of the node that split. Returns the
    // current height.
    int index_insert(MBR mbr) {
        if (mbr.lo > mbr.hi) throw std::invalid_argument("MBR range inverted");
        if (mbr.members.empty()) throw std::invalid_argument("refusing to index an empty MBR");
        const std::uint64_t words = mbr.member_count();
        const std::uint64_t posts = mbr.posting_count();
        if (!root_) {
            root_ = std::make_unique<Node>();
            root_->elements.push_back(std::move(mbr));
            height_ = 1;
        } else {
            auto split = insert_rec(*root_, std::move(mbr));
            if (split) {
                auto new_root = std::make_unique<Node>();
                new_root->elements.push_back(std::move(split->median));
                new_root->children.push_back(std::move(root_));
                new_root->children.push_back(std::move(split->right));
                root_ = std::move(new_root);
                ++height_;
            }
        }
        ++element_count_;
        word_count_ += words;
        posting_count_ += posts;
        return height_;
    }

    // Insert one stream feature: grow the covering MBR if it exists, otherwise create
    // the catalog range for the word and index it with ts = 0.
    int insert_feature(const SAXWord& word, std::uint64_t window_id) {
        require_word(word, cfg_);
        if (MBR* m = find_covering(word)) {
            if (m->insert(word, window_id) == MBR::Insert::inserted) ++word_count_;
            ++posting_count_;
            return height_;
        }
        auto [lo, hi] = catalog_.lookup(word);
        MBR mbr(std::move(lo), std::move(hi));
        mbr.ts = 0;
        mbr.insert(word, window_id);
        return index_insert(std::move(mbr));
    }

    // Depth-first element order: a node's elements left to right, then its children.
    template <class Fn>
    void for_each_element(Fn&& fn) {
        walk_elements(root_.get(), fn);
    }

    template <class Fn>
    void for_each_element(Fn&& fn) const {
        auto wrap = [&](MBR& e) { fn(static_cast<const MBR&>(e)); };
        const_cast<BSTree*>(this)->walk_elements(root_.get(), wrap);
    }

    // Moves every element out in depth-first order and leaves the tree empty.
    std::vector<MBR> extract_all_elements() {
        std::vector<MBR> out;
        out.reserve(static_cast<std::size_t>(element_count_));
        extract_rec(root_.get(), out);
        root_.reset();
        height_ = 0;
        element_count_ = 0;
        word_count_ = 0;
        posting_count_ = 0;
        return out;
    }

    // Checks every structural invariant; throws std::logic_error on the first violation.
    void validate() const {
        if (!root_) {
            if (height_ != 0 || element_count_ != 0) throw std::logic_error("empty tree with nonzero counters");
            return;
        }
        if (!root_->leaf() && root_->children.size() < 2)
            throw std::logic_error("internal root must have at least two children");
        if (root_->leaf() && root_->elements.empty()) throw std::logic_error("root leaf must hold an element");
        int leaf_depth = -1;
        std::uint64_t elems = 0, words = 0, posts = 0;
        validate_rec(*root_, 0, false, leaf_depth, elems, words, posts, nullptr, nullptr);
        if (leaf_depth + 1 != height_) throw std::logic_error("stored height disagrees with leaf depth");
        if (elems != element_count_) throw std::logic_error("element counter drift");
        if (words != word_count_) throw std::logic_error("word counter drift");
        if (posts != posting_count_) throw std::logic_error("posting counter drift");
    }

    // Stable preorder text rendering; used by golden tests and the CLI dump.
    void dump(std::ostream& os) const {
        os << "bstree order=" << params_.order << " cap=" << params_.mbr_capacity << " height=" << height_
           << " elements=" << element_count_ << " clock=" << clock_.counter << "\n";
        dump_rec(root_.get(), 0, os);
    }

private:
    struct SplitResult {
        MBR median;
        std::unique_ptr<Node> right;
    };

    SAXConfig cfg_;
    TreeParams params_;
    MBRCatalog catalog_;
    std::unique_ptr<Node> root_;
    int height_ = 0;
    VisitClock clock_;
    std::uint64_t element_count_ = 0;
    std::uint64_t word_count_ = 0;
    std::uint64_t posting_count_ = 0;

    int max_elems() const { return params_.order - 1; }
    int min_children() const { return (params_.order + 1) / 2; }

    // Index of the first element with lo > word; also the child slot to descend into.
    static std::size_t descent_index(const Node& n, const SAXWord& word) {
        auto it = std::upper_bound(n.elements.begin(), n.elements.end(), word,
                                   [](const SAXWord& w, const MBR& e) { return w < e.lo; });
        return static_cast<std::size_t>(it - n.elements.begin());
    }

    std::optional<SplitResult> insert_rec(Node& n, MBR&& mbr) {
        auto it = std::lower_bound(n.elements.begin(), n.elements.end(), mbr.lo,
                                   [](const MBR& e, const SAXWord& w) { return e.lo < w; });
        const std::size_t idx = static_cast<std::size_t>(it - n.elements.begin());
        if (it != n.elements.end() && it->lo == mbr.lo)
            throw DuplicateRangeError("range with low bound '" + mbr.lo.str() + "' already indexed");
        if (n.leaf()) {
            n.elements.insert(it, std::move(mbr));
        } else {
            auto split = insert_rec(*n.children[idx], std::move(mbr));
            if (split) {
                n.elements.insert(n.elements.begin() + static_cast<std::ptrdiff_t>(idx), std::move(split->median));
                n.children.insert(n.children.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                                  std::move(split->right));
            }
        }
        if (static_cast<int>(n.elements.size()) > max_elems()) return split_node(n);
        return std::nullopt;
    }

    SplitResult split_node(Node& n) {
        const std::size_t mid = (n.elements.size() - 1) / 2;
        std::uint64_t ts_max = 0;
        for (const MBR& e : n.elements) ts_max = std::max(ts_max, e.ts);

        SplitResult out;
        out.right = std::make_unique<Node>();
        out.right->elements.reserve(n.elements.size() - mid - 1);
        for (std::size_t i = mid + 1; i < n.elements.size(); ++i)
            out.right->elements.push_back(std::move(n.elements[i]));
        if (!n.leaf()) {
            out.right->children.reserve(n.children.size() - mid - 1);
            for (std::size_t i = mid + 1; i < n.children.size(); ++i)
                out.right->children.push_back(std::move(n.children[i]));
            n.children.resize(mid + 1);
        }
        out.median = std::move(n.elements[mid]);
        out.median.ts = ts_max;
        n.elements.resize(mid);
        return out;
    }

    template <class Fn>
    void walk_elements(Node* n, Fn& fn) {
        if (!n) return;
        for (MBR& e : n->elements) fn(e);
        for (auto& c : n->children) walk_elements(c.get(), fn);
    }

    void extract_rec(Node* n, std::vector<MBR>& out) {
        if (!n) return;
        for (MBR& e : n->elements) out.push_back(std::move(e));
        for (auto& c : n->children) extract_rec(c.get(), out);
    }

    void validate_rec(const Node& n, int depth, bool is_non_root, int& leaf_depth, std::uint64_t& elems,
                      std::uint64_t& words, std::uint64_t& posts, const SAXWord* lower, const SAXWord* upper) const {
        if (static_cast<int>(n.elements.size()) > max_elems())
            throw std::logic_error("node exceeds max element count");
        if (n.leaf()) {
            if (is_non_root && static_cast<int>(n.elements.size()) < min_children() - 1)
                throw std::logic_error("leaf underfilled");
            if (leaf_depth == -1)
                leaf_depth = depth;
            else if (leaf_depth != depth)
                throw std::logic_error("leaves at unequal depth");
        } else {
            if (n.children.size() != n.elements.size() + 1)
                throw std::logic_error("internal node child count must be element count + 1");
            if (is_non_root && static_cast<int>(n.children.size()) < min_children())
                throw std::logic_error("internal node underfilled");
            if (static_cast<int>(n.children.size()) > params_.order)
                throw std::logic_error("internal node exceeds order");
        }
        for (std::size_t i = 0; i < n.elements.size(); ++i) {
            const MBR& e = n.elements[i];
            if (e.lo > e.hi) throw std::logic_error("MBR range inverted");
            if (i > 0 && !(n.elements[i - 1].hi < e.lo)) throw std::logic_error("sibling ranges out of order");
            if (lower && !(*lower < e.lo)) throw std::logic_error("element violates left separator");
            if (upper && !(e.hi < *upper)) throw std::logic_error("element violates right separator");
            if (e.members.empty()) throw std::logic_error("indexed MBR has no members");
            if (e.members.size() > params_.mbr_capacity) throw std::logic_error("MBR exceeds capacity");
            SymbolEnvelope env;
            for (std::size_t k = 0; k < e.members.size(); ++k) {
                const MBRMember& m = e.members[k];
                if (!e.covers(m.word)) throw std::logic_error("member outside MBR range");
                if (k > 0 && !(e.members[k - 1].word < m.word)) throw std::logic_error("members not strictly sorted");
                if (m.postings.empty()) throw std::logic_error("member with empty postings");
                for (std::size_t p = 1; p < m.postings.size(); ++p)
                    if (m.postings[p - 1] >= m.postings[p]) throw std::logic_error("postings not strictly increasing");
                env.expand(m.word);
                ++words;
                posts += m.postings.size();
            }
            if (!(env == e.envelope)) throw std::logic_error("envelope does not match members");
            ++elems;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const SAXWord* lo = i == 0 ? lower : &n.elements[i - 1].hi;
            const SAXWord* hi = i == n.elements.size() ? upper : &n.elements[i].lo;
            validate_rec(*n.children[i], depth + 1, true, leaf_depth, elems, words, posts, lo, hi);
        }
    }

    void dump_rec(const Node* n, int depth, std::ostream& os) const {
        if (!n) return;
        os << "node depth=" << depth << " leaf=" << (n->leaf() ? "yes" : "no") << " elems=" << n->elements.size()
           << "\n";
        for (const MBR& e : n->elements) {
            os << "  elem range=[" << e.lo.str() << ".." << e.hi.str() << "] members=" << e.member_count()
               << " postings=" << e.posting_count() << " ts=" << e.ts << "\n";
        }
        for (const auto& c : n->children) dump_rec(c.get(), depth + 1, os);
    }
};

}  // namespace bstree
