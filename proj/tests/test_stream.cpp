#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "bstree/stream.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bstree;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_SUITE_BEGIN("stream");

TEST_CASE("window spec validation") {
    CHECK_THROWS_AS(WindowSpec(0), std::invalid_argument);
    CHECK_THROWS_AS(WindowSpec(4, 5), std::invalid_argument);
    CHECK(WindowSpec(4).slide == 4);  // tumbling by default
    CHECK(WindowSpec(4, 1).slide == 1);
}

TEST_CASE("push emits after w points, then every slide") {
    const SAXConfig cfg(4, 2, 3);

    SUBCASE("tumbling") {
        StreamIngestor ing(WindowSpec(4, 4), cfg);
        CHECK_FALSE(ing.push(1.0));
        CHECK_FALSE(ing.push(2.0));
        CHECK_FALSE(ing.push(3.0));
        const auto f = ing.push(4.0);
        REQUIRE(f);
        CHECK(f->record.window_id == 0);
        CHECK(f->record.start_seq == 0);
        CHECK(f->record.normalized.values.size() == 4);
    }
    SUBCASE("slide one") {
        StreamIngestor ing(WindowSpec(4, 1), cfg);
        for (int i = 0; i < 4; ++i) ing.push(static_cast<double>(i));
        const auto f = ing.push(9.0);  // fifth point
        REQUIRE(f);
        CHECK(f->record.window_id == 1);
        CHECK(f->record.start_seq == 1);
    }
    SUBCASE("emission count for 12 points, slide 4") {
        StreamIngestor ing(WindowSpec(4, 4), cfg);
        std::vector<std::uint64_t> starts;
        for (int i = 0; i < 12; ++i)
            if (auto f = ing.push(static_cast<double>(i * i))) starts.push_back(f->record.start_seq);
        CHECK(starts == std::vector<std::uint64_t>{0, 4, 8});
    }
}

TEST_CASE("emission count matches floor((n-w)/slide)+1") {
    const SAXConfig cfg(6, 3, 4);
    for (int slide = 1; slide <= 6; ++slide) {
        for (int n : {0, 3, 6, 7, 17, 40}) {
            StreamIngestor ing(WindowSpec(6, slide), cfg);
            std::uint64_t emitted = 0;
            for (int i = 0; i < n; ++i)
                if (ing.push(static_cast<double>(i % 5))) ++emitted;
            const std::uint64_t expected = n >= 6 ? static_cast<std::uint64_t>((n - 6) / slide) + 1 : 0;
            CHECK(emitted == expected);
        }
    }
}

TEST_CASE("out-of-order seq rejected") {
    const SAXConfig cfg(4, 2, 3);
    StreamIngestor ing(WindowSpec(4), cfg);
    ing.push(StreamPoint{5, 1.0});
    CHECK_THROWS_AS(ing.push(StreamPoint{5, 2.0}), StreamOrderError);
    CHECK_THROWS_AS(ing.push(StreamPoint{2, 2.0}), StreamOrderError);
    CHECK_NOTHROW(ing.push(StreamPoint{6, 2.0}));
}

TEST_CASE("emitted words match an independent re-slice of the input") {
    const SAXConfig cfg(8, 4, 5);
    const auto data = synth_stream(SynthKind::random_walk, 200, 99);
    for (int slide : {1, 3, 8}) {
        WindowArchive archive;
        std::vector<StreamFeature> feats;
        replay_values(data, WindowSpec(8, slide), cfg, &archive, [&](StreamFeature f) { feats.push_back(std::move(f)); });
        REQUIRE(feats.size() == static_cast<std::size_t>((200 - 8) / slide + 1));
        for (const auto& f : feats) {
            CHECK(f.record.start_seq == f.record.window_id * static_cast<std::uint64_t>(slide));
            const std::span<const double> slice(data.data() + f.record.start_seq, 8);
            const auto [word, nw] = sax_transform(slice, cfg);
            CHECK(word == f.word);
            CHECK(word == f.record.word);
            CHECK(nw.values == f.record.normalized.values);
        }
    }
}

TEST_CASE("archive round-trip and eviction") {
    const SAXConfig cfg(4, 2, 3);
    WindowArchive archive(3);  // capacity three windows
    StreamIngestor ing(WindowSpec(4, 4), cfg, &archive);
    for (int i = 0; i < 24; ++i) ing.push(static_cast<double>((i * 7) % 11));
    CHECK(ing.windows_emitted() == 6);
    CHECK(archive.size() == 3);
    CHECK(archive.first_id() == 3);

    WindowRecord rec;
    CHECK(archive.lookup(2, rec) == WindowArchive::Lookup::evicted);
    CHECK(archive.lookup(99, rec) == WindowArchive::Lookup::unknown);
    REQUIRE(archive.lookup(4, rec) == WindowArchive::Lookup::found);
    CHECK(rec.window_id == 4);
    CHECK(rec.start_seq == 16);
}

TEST_CASE("archived record is bit-identical until evicted") {
    const SAXConfig cfg(8, 2, 4);
    WindowArchive archive;
    std::vector<StreamFeature> feats;
    const auto data = synth_stream(SynthKind::sine_with_noise, 64, 5);
    replay_values(data, WindowSpec(8, 8), cfg, &archive, [&](StreamFeature f) { feats.push_back(std::move(f)); });
    for (const auto& f : feats) {
        WindowRecord rec;
        REQUIRE(archive.lookup(f.record.window_id, rec) == WindowArchive::Lookup::found);
        CHECK(rec.normalized.values == f.record.normalized.values);
        CHECK(rec.normalized.mean == f.record.normalized.mean);
        CHECK(rec.normalized.stddev == f.record.normalized.stddev);
        CHECK(rec.word == f.record.word);
        CHECK(rec.start_seq == f.record.start_seq);
    }
}

TEST_CASE("raw reconstruction inverts normalization") {
    const SAXConfig cfg(8, 2, 4);
    WindowArchive archive;
    const auto data = synth_stream(SynthKind::random_walk, 32, 21);
    replay_values(data, WindowSpec(8, 8), cfg, &archive, [](StreamFeature) {});
    archive.for_each([&](const WindowRecord& rec) {
        const auto raw = rec.raw();
        for (std::size_t i = 0; i < raw.size(); ++i)
            CHECK(raw[i] == doctest::Approx(data[rec.start_seq + i]).epsilon(1e-9));
    });
}

TEST_CASE("replay_file parses text streams") {
    const SAXConfig cfg(4, 2, 3);

    SUBCASE("exactly one window") {
        const auto path = write_temp("bstree_one_window.txt", "1\n2\n3\n4\n");
        WindowArchive archive;
        std::uint64_t n = replay_file(path, WindowSpec(4, 4), cfg, &archive, [](StreamFeature) {});
        CHECK(n == 1);
    }
    SUBCASE("parse error carries line number") {
        const auto path = write_temp("bstree_bad.txt", "1\n2\nx\n");
        try {
            parse_stream_file(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("comments, blank lines, row-major flattening") {
        const auto path = write_temp("bstree_rows.txt", "# header comment\n1 2 3\n\n4 5 6\n");
        CHECK(parse_stream_file(path) == std::vector<double>{1, 2, 3, 4, 5, 6});
    }
    SUBCASE("drop first column") {
        const auto path = write_temp("bstree_labels.txt", "7 1 2\n8 3 4\n");
        CHECK(parse_stream_file(path, true) == std::vector<double>{1, 2, 3, 4});
    }
    SUBCASE("non-finite rejected") {
        const auto path = write_temp("bstree_nan.txt", "1\nnan\n");
        CHECK_THROWS_AS(parse_stream_file(path), ParseError);
    }
    SUBCASE("empty file yields nothing") {
        const auto path = write_temp("bstree_empty.txt", "");
        WindowArchive archive;
        CHECK(replay_file(path, WindowSpec(4, 4), cfg, &archive, [](StreamFeature) {}) == 0);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(parse_stream_file("/nonexistent/bstree.txt"), DataError);
    }
    SUBCASE("NW*TW values yield NW features") {
        std::string content;
        for (int i = 0; i < 5 * 4; ++i) content += std::to_string(i) + "\n";
        const auto path = write_temp("bstree_nwtw.txt", content);
        WindowArchive archive;
        CHECK(replay_file(path, WindowSpec(4, 4), cfg, &archive, [](StreamFeature) {}) == 5);
    }
}

TEST_CASE("synthetic streams") {
    SUBCASE("empty") { CHECK(synth_stream(SynthKind::random_walk, 0, 3).empty()); }
    SUBCASE("deterministic for a fixed seed") {
        CHECK(synth_stream(SynthKind::random_walk, 500, 12) == synth_stream(SynthKind::random_walk, 500, 12));
        CHECK(synth_stream(SynthKind::sine_with_noise, 500, 12) == synth_stream(SynthKind::sine_with_noise, 500, 12));
        CHECK(synth_stream(SynthKind::random_walk, 100, 1) != synth_stream(SynthKind::random_walk, 100, 2));
    }
    SUBCASE("random walk steps average to zero") {
        const std::uint64_t n = 1'000'000;
        const auto walk = synth_stream(SynthKind::random_walk, n, 4242);
        double mean_step = walk.back() / static_cast<double>(n);  // telescoping sum of unit-variance steps
        CHECK(std::fabs(mean_step) < 3.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("archive supports concurrent readers during writes") {
    const SAXConfig cfg(8, 4, 4);
    WindowArchive archive(256);
    std::atomic<bool> done{false};
    std::atomic<int> failures{0};

    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&, t] {
            Rng rng(static_cast<std::uint64_t>(t) + 1);
            WindowRecord rec;
            while (!done.load()) {
                const std::uint64_t next = archive.next_id();
                if (next != 0 &&
                    archive.lookup(rng.uniform_index(next), rec) == WindowArchive::Lookup::found) {
                    if (rec.normalized.values.size() != 8 || rec.word.length() != 4) failures.fetch_add(1);
                }
                std::this_thread::sleep_for(std::chrono::microseconds(50));  // let the writer through
            }
        });
    }
    StreamIngestor ing(WindowSpec(8, 2), cfg, &archive);
    const auto data = synth_stream(SynthKind::random_walk, 20000, 77);
    for (double v : data) ing.push(v);
    done.store(true);
    for (auto& th : readers) th.join();
    CHECK(failures.load() == 0);
}

TEST_SUITE_END();
