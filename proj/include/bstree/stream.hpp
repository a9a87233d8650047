#pragma once

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "bstree/errors.hpp"
#include "bstree/rng.hpp"
#include "bstree/sax.hpp"

namespace bstree {

struct StreamPoint {
    std::uint64_t seq = 0;
    double value = 0.0;
};

struct WindowSpec {
    int w = 0;
    int slide = 0;  // step between emitted windows, in [1, w]

    WindowSpec() = default;

    explicit WindowSpec(int w_, int slide_ = 0) : w(w_), slide(slide_ == 0 ? w_ : slide_) {
        if (w <= 0) throw std::invalid_argument("window length must be positive");
        if (slide < 1 || slide > w) throw std::invalid_argument("slide must lie in [1, w]");
    }
};

// One emitted window: id, position, z-normalized values with their source mean/stddev,
// and the SAX word. The raw subsequence is recoverable from the normalization fields.
struct WindowRecord {
    std::uint64_t window_id = 0;
    std::uint64_t start_seq = 0;
    NormalizedWindow normalized;
    SAXWord word;

    std::vector<double> raw() const {
        std::vector<double> out(normalized.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = normalized.values[i] * normalized.stddev + normalized.mean;
        return out;
    }
};

// Append-only window store addressed by window_id, bounded with oldest-first eviction.
// Single writer, any number of concurrent readers.
class WindowArchive {
public:
    enum class Lookup { found, evicted, unknown };

    explicit WindowArchive(std::uint64_t capacity = std::numeric_limits<std::uint64_t>::max())
        : capacity_(capacity == 0 ? std::numeric_limits<std::uint64_t>::max() : capacity) {}

    void append(WindowRecord rec) {
        std::unique_lock lock(mu_);
        if (rec.window_id != next_) throw std::logic_error("archive append out of order");
        records_.push_back(std::move(rec));
        ++next_;
        while (records_.size() > capacity_) {
            records_.pop_front();
            ++first_;
        }
    }

    Lookup lookup(std::uint64_t id, WindowRecord& out) const {
        std::shared_lock lock(mu_);
        if (id >= next_) return Lookup::unknown;
        if (id < first_) return Lookup::evicted;
        out = records_[id - first_];
        return Lookup::found;
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        std::shared_lock lock(mu_);
        for (const WindowRecord& r : records_) fn(r);
    }

    std::uint64_t size() const {
        std::shared_lock lock(mu_);
        return records_.size();
    }

    std::uint64_t first_id() const {
        std::shared_lock lock(mu_);
        return first_;
    }

    std::uint64_t next_id() const {
        std::shared_lock lock(mu_);
        return next_;
    }

private:
    std::uint64_t capacity_;
    std::deque<WindowRecord> records_;
    std::uint64_t first_ = 0;
    std::uint64_t next_ = 0;
    mutable std::shared_mutex mu_;
};

struct StreamFeature {
    SAXWord word;
    WindowRecord record;
};

// Sliding-window feature extractor: buffers points, and once w are present emits one
// (word, record) every `slide` arrivals. Emitted records are appended to the archive.
class StreamIngestor {
public:
    StreamIngestor(WindowSpec spec, SAXConfig cfg, WindowArchive* archive = nullptr)
        : spec_(spec), cfg_(std::move(cfg)), archive_(archive) {
        if (spec_.w != cfg_.w) throw std::invalid_argument("window spec and SAX config disagree on window length");
    }

    std::optional<StreamFeature> push(StreamPoint p) {
        if (seen_any_ && p.seq <= last_seq_)
            throw StreamOrderError("stream points must arrive with strictly increasing seq (got " +
                                   std::to_string(p.seq) + " after " + std::to_string(last_seq_) + ")");
        seen_any_ = true;
        last_seq_ = p.seq;
        buf_.push_back(p);
        if (buf_.size() > static_cast<std::size_t>(spec_.w)) buf_.pop_front();
        ++arrived_;

        if (arrived_ < static_cast<std::uint64_t>(spec_.w)) return std::nullopt;
        if ((arrived_ - spec_.w) % static_cast<std::uint64_t>(spec_.slide) != 0) return std::nullopt;

        std::vector<double> raw(buf_.size());
        for (std::size_t i = 0; i < buf_.size(); ++i) raw[i] = buf_[i].value;
        auto [word, nw] = sax_transform(raw, cfg_);

        WindowRecord rec;
        rec.window_id = next_window_++;
        rec.start_seq = buf_.front().seq;
        rec.normalized = std::move(nw);
        rec.word = word;
        if (archive_) archive_->append(rec);
        return StreamFeature{std::move(word), std::move(rec)};
    }

    // Convenience for dense streams: seq is the arrival counter.
    std::optional<StreamFeature> push(double value) { return push(StreamPoint{arrived_, value}); }

    std::uint64_t points_seen() const { return arrived_; }
    std::uint64_t windows_emitted() const { return next_window_; }
    const SAXConfig& config() const { return cfg_; }
    const WindowSpec& spec() const { return spec_; }

private:
    WindowSpec spec_;
    SAXConfig cfg_;
    WindowArchive* archive_;
    std::deque<StreamPoint> buf_;
    std::uint64_t arrived_ = 0;
    std::uint64_t last_seq_ = 0;
    bool seen_any_ = false;
    std::uint64_t next_window_ = 0;
};

// Plain-text stream files: one or more whitespace-separated reals per line, flattened
// row-major; lines whose first non-space character is '#' are skipped. With
// drop_first_column the first token of each data line (e.g. a class label) is dropped.
inline std::vector<double> parse_stream_file(const std::string& path, bool drop_first_column = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stream file: " + path);
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        bool first_token = true;
        while (pos < line.size()) {
            std::size_t end = line.find_first_of(" \t\r\n,", pos);
            if (end == std::string::npos) end = line.size();
            const std::string tok = line.substr(pos, end - pos);
            pos = line.find_first_not_of(" \t\r\n,", end);
            if (pos == std::string::npos) pos = line.size();
            if (tok.empty()) continue;
            if (first_token && drop_first_column) {
                first_token = false;
                continue;
            }
            first_token = false;
            char* parse_end = nullptr;
            const double v = std::strtod(tok.c_str(), &parse_end);
            if (parse_end != tok.c_str() + tok.size())
                throw ParseError("cannot parse '" + tok + "' as a number", lineno);
            if (!std::isfinite(v)) throw ParseError("non-finite value '" + tok + "' rejected", lineno);
            out.push_back(v);
        }
    }
    return out;
}

// Push every value through an ingestor, handing each emitted feature to the sink.
// Returns the number of features emitted.
template <class Sink>
std::uint64_t replay_values(std::span<const double> values, const WindowSpec& spec, const SAXConfig& cfg,
                            WindowArchive* archive, Sink&& sink) {
    StreamIngestor ingest(spec, cfg, archive);
    std::uint64_t count = 0;
    for (double v : values) {
        if (auto f = ingest.push(v)) {
            ++count;
            sink(std::move(*f));
        }
    }
    return count;
}

template <class Sink>
std::uint64_t replay_file(const std::string& path, const WindowSpec& spec, const SAXConfig& cfg,
                          WindowArchive* archive, Sink&& sink, bool drop_first_column = false) {
    const std::vector<double> values = parse_stream_file(path, drop_first_column);
    return replay_values<Sink>(values, spec, cfg, archive, std::forward<Sink>(sink));
}

enum class SynthKind { random_walk, sine_with_noise };

// Deterministic synthetic streams for a fixed seed.
inline std::vector<double> synth_stream(SynthKind kind, std::uint64_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(n);
    if (kind == SynthKind::random_walk) {
        double v = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            v += rng.gaussian();
            out.push_back(v);
        }
    } else {
        for (std::uint64_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i);
            out.push_back(std::sin(2.0 * 3.141592653589793238462643383279502884 * t / 100.0) + 0.2 * rng.gaussian());
        }
    }
    return out;
}

// Pull-based adapter over a buffer of values; drives build loops one feature at a time.
class FeatureSource {
public:
    FeatureSource(std::vector<double> values, WindowSpec spec, SAXConfig cfg, WindowArchive* archive = nullptr)
        : values_(std::move(values)), ingest_(spec, std::move(cfg), archive) {}

    std::optional<StreamFeature> next() {
        while (pos_ < values_.size()) {
            auto f = ingest_.push(values_[pos_++]);
            if (f) return f;
        }
        return std::nullopt;
    }

    std::uint64_t emitted() const { return ingest_.windows_emitted(); }

private:
    std::vector<double> values_;
    std::size_t pos_ = 0;
    StreamIngestor ingest_;
};

}  // namespace bstree
