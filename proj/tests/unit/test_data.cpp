#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedae/data.hpp"
#include "fedae/metrics.hpp"
#include "fedae/random.hpp"

using namespace fedae;

namespace {

WindowSet labeled_set(std::size_t n, std::string id, std::string source, std::uint64_t seed) {
    Rng rng(seed);
    WindowSet ws;
    ws.client_id = std::move(id);
    ws.source = std::move(source);
    ws.labels.emplace();
    std::vector<float> w(kWindowElems);
    for (std::size_t i = 0; i < n; ++i) {
        for (float& v : w) v = static_cast<float>(rng.normal());
        // The first value tags the window so partitions can be traced back.
        w[0] = static_cast<float>(i);
        ws.push(w, static_cast<int>(rng.below(6)));
    }
    return ws;
}

}  // namespace

TEST_CASE("activity codes") {
    CHECK(activity_code(ActivityLabel::W) == "W");
    CHECK(activity_code(12) == "SW");
    CHECK(activity_from_code("BK") == ActivityLabel::BK);
    CHECK(static_cast<int>(activity_from_code("J")) == 6);
    CHECK_THROWS(activity_from_code("XX"));
    CHECK_THROWS(activity_from_index(13));
    CHECK(all_activities().size() == 13);
}

TEST_CASE("window set basics") {
    WindowSet ws = labeled_set(5, "c", "s", 1);
    CHECK(ws.size() == 5);
    const std::vector<std::size_t> idx{4, 1};
    const Tensor b = ws.batch(idx);
    CHECK(b.shape() == Shape{2, 6, 128});
    CHECK(b[0] == 4.0f);
    CHECK(b[768] == 1.0f);
    const WindowSet sub = ws.subset(idx);
    CHECK(sub.size() == 2);
    CHECK((*sub.labels)[0] == (*ws.labels)[4]);

    WindowSet unlabeled;
    CHECK_THROWS(unlabeled.push(ws.window(0), 3));
    ws.labels->push_back(1);
    CHECK_THROWS_AS(ws.validate(), DataError);
}

TEST_CASE("resampling by linear interpolation") {
    Stream s;
    s.channels = 1;
    s.values = {0, 1, 2, 3, 4};
    const Stream up = resample(s, 1.0, 2.0);
    REQUIRE(up.length() == 9);
    CHECK(up.values[1] == doctest::Approx(0.5));
    CHECK(up.values[8] == doctest::Approx(4.0));

    s.values.assign(100, 1.0);
    CHECK(resample(s, 100.0, 50.0).length() == 50);
    CHECK(resample(s, 50.0, 50.0).values == s.values);
}

TEST_CASE("sliding windows") {
    CHECK(window_count(127) == 0);
    CHECK(window_count(128) == 1);
    CHECK(window_count(192) == 2);
    CHECK(window_count(1000) == 14);

    Stream s;
    s.values.resize(256 * 6);
    s.labels.emplace(256, 0);
    for (std::size_t t = 0; t < 256; ++t) {
        for (std::size_t c = 0; c < 6; ++c) s.values[t * 6 + c] = static_cast<double>(t * 10 + c);
        if (t >= 100) (*s.labels)[t] = 3;
    }
    const WindowSet ws = make_windows(s);
    REQUIRE(ws.size() == 3);
    // Channel-major inside each window.
    CHECK(ws.window(1)[0] == 640.0f);
    CHECK(ws.window(1)[128] == 641.0f);
    CHECK((*ws.labels)[0] == 0);  // 100 of 128 samples are label 0
    CHECK((*ws.labels)[1] == 3);
}

TEST_CASE("z-normalization per window and channel") {
    WindowSet ws = labeled_set(2, "c", "s", 3);
    std::fill_n(ws.values.begin() + 128, 128, 5.0f);  // constant channel
    znormalize_in_place(ws);
    for (std::size_t w = 0; w < 2; ++w) {
        for (std::size_t c = 0; c < 6; ++c) {
            const auto x = ws.window(w).subspan(c * 128, 128);
            const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 128.0;
            double var = 0;
            for (float v : x) var += (v - mean) * (v - mean);
            CHECK(std::abs(mean) < 1e-5);
            if (w == 0 && c == 1) {
                CHECK(var == 0.0);
            } else {
                CHECK(std::sqrt(var / 128.0) == doctest::Approx(1.0).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("split sizes stay within one window of 20/64/16") {
    for (std::size_t n = 5; n <= 500; ++n) {
        const SplitSizes s = split_sizes(n);
        CHECK(s.test + s.client_unlabeled + s.server_labeled == n);
        CHECK(std::abs(static_cast<double>(s.test) - 0.20 * n) <= 1.0);
        CHECK(std::abs(static_cast<double>(s.client_unlabeled) - 0.64 * n) <= 1.0);
        CHECK(std::abs(static_cast<double>(s.server_labeled) - 0.16 * n) <= 1.0);
    }
    CHECK(split_sizes(250).test == 50);
    CHECK(split_sizes(250).server_labeled == 40);
    CHECK(split_sizes(250).client_unlabeled == 160);
}

TEST_CASE("partition is disjoint, exhaustive and seeded") {
    const WindowSet ws = labeled_set(37, "c", "s", 4);
    const PartitionFragment a = partition(ws, 10), b = partition(ws, 10), c = partition(ws, 11);
    CHECK(a.indices.test == b.indices.test);
    CHECK(a.indices.test != c.indices.test);
    std::set<std::size_t> all;
    for (auto* part : {&a.indices.test, &a.indices.client_unlabeled, &a.indices.server_labeled}) {
        for (std::size_t i : *part) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == 37);
    CHECK_FALSE(a.shard.train.has_labels());
    CHECK(a.shard.train_ground_truth.size() == a.shard.train.size());
    CHECK(a.shard.test.has_labels());
    CHECK(a.server_labeled.has_labels());
    for (std::size_t k = 0; k < a.indices.test.size(); ++k) {
        CHECK(a.shard.test.window(k)[0] == static_cast<float>(a.indices.test[k]));
    }
    CHECK_THROWS_AS(partition(labeled_set(4, "c", "s", 1), 1), DataError);
}

TEST_CASE("federation layout") {
    std::vector<WindowSet> clients{labeled_set(30, "b_1", "b", 1), labeled_set(20, "a_1", "a", 2),
                                   labeled_set(25, "b_0", "b", 3)};
    const FederationLayout l = build_federation(clients, 99);
    REQUIRE(l.clients.size() == 3);
    CHECK(l.clients[0].client_id == "a_1");
    CHECK(l.clients[2].client_id == "b_1");
    CHECK(l.sources() == std::vector<std::string>{"a", "b"});
    std::size_t test = 0, server = 0, train = 0;
    for (const auto& c : l.clients) {
        test += c.test.size();
        train += c.train.size();
    }
    server = l.server_labeled.size();
    CHECK(test == l.server_test.size());
    CHECK(test + server + train == 75);
    CHECK(l.test_sources.size() == l.server_test.size());
    CHECK(l.server_labeled_sources.size() == server);
    CHECK(l.test_indices("a").size() == l.clients[0].test.size());
    CHECK(l.test_indices("zzz").empty());

    clients.push_back(labeled_set(10, "a_1", "a", 5));
    CHECK_THROWS_AS(build_federation(clients, 1), DataError);
}

TEST_CASE("synthetic generator") {
    const SynthConfig cfg = SynthConfig::reference();
    const auto a = generate_synthetic_clients(cfg, 5), b = generate_synthetic_clients(cfg, 5);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].values == b[i].values);
        CHECK(a[i].labels == b[i].labels);
        CHECK(a[i].size() >= 200);
        CHECK(a[i].size() <= 300);
        if (i > 0) CHECK(a[i - 1].client_id < a[i].client_id);
    }
    CHECK(generate_synthetic_clients(cfg, 6)[0].values != a[0].values);

    const SynthConfig full = SynthConfig::full_scale(5, 6);
    const auto many = generate_synthetic_clients(full, 1);
    CHECK(many.size() == 80);
    std::map<std::string, int> per_tag;
    for (const auto& c : many) ++per_tag[c.source];
    CHECK(per_tag["uci"] == 5);
    CHECK(per_tag["hhar"] == 51);
    CHECK(per_tag["realworld"] == 15);
    CHECK(per_tag["shl"] == 9);

    SynthConfig broken = cfg;
    broken.datasets[0].classes.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("class distribution follows the activity sets") {
    SynthConfig cfg = SynthConfig::full_scale(60, 80);
    cfg.datasets.resize(3);  // uci, hhar, realworld
    cfg.datasets[1].clients = 2;
    cfg.datasets[2].clients = 4;
    const FederationLayout layout = generate_synthetic_federation(cfg, 3);
    const auto dist = class_distribution(layout);
    const std::set<ActivityLabel> uci{ActivityLabel::ST, ActivityLabel::SD, ActivityLabel::W,
                                      ActivityLabel::U,  ActivityLabel::D,  ActivityLabel::L};
    for (int c = 0; c < 13; ++c) {
        if (!uci.contains(static_cast<ActivityLabel>(c))) CHECK(dist.at("uci")[c] == 0);
    }
    std::int64_t total = 0;
    for (const auto& [tag, counts] : dist) total += std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    std::int64_t windows = static_cast<std::int64_t>(layout.server_labeled.size() + layout.server_test.size());
    for (const auto& c : layout.clients) windows += static_cast<std::int64_t>(c.train.size());
    CHECK(total == windows);

    // Jump only occurs in realworld, where it is the minority.
    const auto& rw = dist.at("realworld");
    const auto jump = rw[static_cast<int>(ActivityLabel::J)];
    for (ActivityLabel l : cfg.datasets[2].classes) {
        if (l != ActivityLabel::J) CHECK(rw[static_cast<int>(l)] > jump);
    }
    CHECK(jump > 0);
}

TEST_CASE("storage footprint") {
    CHECK(window_bytes(10, false) == 30720);
    CHECK(window_bytes(10, true) == 30760);
    const FederationLayout layout = generate_synthetic_federation(SynthConfig::reference(), 1);
    const StorageFootprint fp = storage_footprint(layout);
    CHECK(fp.per_client.size() == 8);
    std::uint64_t total = 0;
    for (const auto& c : layout.clients) {
        CHECK(fp.per_client.at(c.client_id) == window_bytes(c.train.size(), false) + window_bytes(c.test.size(), true));
        total += fp.per_client.at(c.client_id);
    }
    CHECK(fp.mean_per_source.size() == 4);
    CHECK(total < 10u * 1024 * 1024);
}
