#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "fedae/federation.hpp"
#include "fedae/random.hpp"

using namespace fedae;

namespace {

ParamSet vector_params(std::vector<float> v) {
    ParamSet p;
    const std::size_t n = v.size();
    p.add("w", Tensor(Shape{n}, std::move(v)));
    return p;
}

ParamSet random_params(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-5.0, 5.0));
    return vector_params(std::move(v));
}

/// A small federation that trains in well under a second per round.
FederationLayout tiny_layout(std::uint64_t seed, std::size_t clients = 3) {
    SynthConfig cfg;
    const std::string tags[] = {"a", "b"};
    for (std::size_t i = 0; i < clients; ++i) {
        cfg.datasets.push_back({tags[i % 2] + std::to_string(i), 1, 20, 24,
                                {ActivityLabel::W, ActivityLabel::ST, ActivityLabel::L}, {}});
    }
    return generate_synthetic_federation(cfg, seed);
}

FedConfig tiny_fed(int rounds) {
    FedConfig f;
    f.rounds = rounds;
    f.local_epochs = 1;
    f.client_batch = 8;
    f.seed = 4;
    return f;
}

}  // namespace

TEST_CASE("fedavg hand examples") {
    const std::vector<ParamSet> two{vector_params({0.0f}), vector_params({1.0f})};
    const std::vector<double> w{1.0, 3.0};
    CHECK(fedavg_aggregate(two, w).at("w")[0] == doctest::Approx(0.75));

    Rng rng(1);
    const std::vector<ParamSet> one{random_params(10, rng)};
    const std::vector<double> any{7.5};
    CHECK(fedavg_aggregate(one, any) == one[0]);
}

TEST_CASE("fedavg matches a brute-force weighted mean") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ParamSet> models;
        std::vector<double> weights;
        for (int i = 0; i < 3; ++i) {
            models.push_back(random_params(10, rng));
            weights.push_back(1.0 + static_cast<double>(rng.below(300)));
        }
        const ParamSet agg = fedavg_aggregate(models, weights);
        const double total = weights[0] + weights[1] + weights[2];
        for (std::size_t j = 0; j < 10; ++j) {
            double expected = 0;
            for (int i = 0; i < 3; ++i) expected += weights[i] * models[i].at("w")[j];
            expected /= total;
            CHECK(std::abs(agg.at("w")[j] - expected) < 1e-6 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("fedavg properties") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(5);
        std::vector<ParamSet> models;
        std::vector<double> weights, scaled;
        for (std::size_t i = 0; i < k; ++i) {
            models.push_back(random_params(8, rng));
            weights.push_back(rng.uniform(0.1, 10.0));
            scaled.push_back(weights.back() * 37.0);
        }
        const ParamSet a = fedavg_aggregate(models, weights), b = fedavg_aggregate(models, scaled);
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(std::abs(a.at("w")[j] - b.at("w")[j]) < 1e-6);
            float lo = models[0].at("w")[j], hi = lo;
            for (const auto& m : models) {
                lo = std::min(lo, m.at("w")[j]);
                hi = std::max(hi, m.at("w")[j]);
            }
            CHECK(a.at("w")[j] >= lo);
            CHECK(a.at("w")[j] <= hi);
        }
        const std::vector<ParamSet> same(k, models[0]);
        const ParamSet idem = fedavg_aggregate(same, weights);
        for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(idem.at("w")[j] - models[0].at("w")[j]) < 1e-6);
    }
}

TEST_CASE("heavy weight dominates the average") {
    Rng rng(4);
    const std::vector<ParamSet> models{random_params(6, rng), random_params(6, rng)};
    double previous = 1e9;
    for (double ratio : {1.0, 10.0, 1e3, 1e6}) {
        const std::vector<double> w{ratio, 1.0};
        const ParamSet agg = fedavg_aggregate(models, w);
        double dist = 0;
        for (std::size_t j = 0; j < 6; ++j) dist = std::max(dist, static_cast<double>(std::abs(agg.at("w")[j] - models[0].at("w")[j])));
        CHECK(dist <= previous);
        previous = dist;
    }
    CHECK(previous < 1e-4);
}

TEST_CASE("fedavg rejects bad input") {
    const std::vector<ParamSet> two{vector_params({0.0f}), vector_params({1.0f, 2.0f})};
    const std::vector<double> w{1.0, 1.0};
    CHECK_THROWS(fedavg_aggregate(two, w));
    const std::vector<ParamSet> ok{vector_params({0.0f}), vector_params({1.0f})};
    const std::vector<double> zero{1.0, 0.0};
    CHECK_THROWS(fedavg_aggregate(ok, zero));
    const std::vector<double> short_w{1.0};
    CHECK_THROWS(fedavg_aggregate(ok, short_w));
    CHECK_THROWS(fedavg_aggregate({}, {}));
}

TEST_CASE("local training contracts") {
    const FederationLayout layout = tiny_layout(1);
    const ClientShard& shard = layout.clients[0];
    const ParamSet init = build_autoencoder({}, 3);
    const ParamSet copy = init;

    FedConfig zero = tiny_fed(1);
    zero.client_lr = 0.0;
    CHECK(local_train(init, shard, zero, 9).params == init);

    const FedConfig cfg = tiny_fed(1);
    const LocalResult a = local_train(init, shard, cfg, 9), b = local_train(init, shard, cfg, 9);
    CHECK(a.params == b.params);
    CHECK(*a.test_loss == *b.test_loss);
    CHECK(init == copy);
    CHECK_FALSE(local_train(init, shard, cfg, 10).params == a.params);

    ClientShard empty = shard;
    empty.train = WindowSet{};
    CHECK_THROWS_AS(local_train(init, empty, cfg, 1), DataError);
}

TEST_CASE("round accounting and single-client equivalence") {
    const FederationLayout layout = tiny_layout(2);
    const FedConfig cfg = tiny_fed(3);
    const PretrainResult r = run_federated_pretraining(layout, cfg);
    REQUIRE(r.rounds.size() == 3);
    const std::uint64_t bytes = r.params.byte_size();
    std::uint64_t down = 0;
    for (const auto& rec : r.rounds) {
        CHECK(rec.participants == 3);
        CHECK(rec.bytes_down == 3 * bytes);
        CHECK(rec.bytes_up == rec.bytes_down);
        CHECK(std::isfinite(rec.server_loss));
        down += rec.bytes_down;
    }
    CHECK(down == 3u * 3u * bytes);

    FederationLayout single = layout;
    single.clients.resize(1);
    const FedConfig one = tiny_fed(1);
    const ParamSet init = initial_autoencoder(one, {});
    const PretrainResult fed = run_federated_pretraining(single, one, init);
    const LocalResult local = local_train(init, single.clients[0], one, client_round_seed(one.seed, 1, single.clients[0].client_id));
    CHECK(fed.params == local.params);
}

TEST_CASE("parallel execution equals serial execution") {
    const FederationLayout layout = tiny_layout(3, 4);
    FedConfig serial = tiny_fed(2), parallel = tiny_fed(2);
    parallel.workers = 3;
    const PretrainResult a = run_federated_pretraining(layout, serial), b = run_federated_pretraining(layout, parallel);
    CHECK(a.params == b.params);
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        CHECK(a.rounds[i].server_loss == b.rounds[i].server_loss);
        CHECK(a.rounds[i].client_loss_mean == b.rounds[i].client_loss_mean);
    }
}

TEST_CASE("partial participation and empty shards") {
    FederationLayout layout = tiny_layout(4, 4);
    FedConfig cfg = tiny_fed(2);
    cfg.client_fraction = 0.5;
    CHECK(cfg.participants(4) == 2);
    const PretrainResult r = run_federated_pretraining(layout, cfg);
    for (const auto& rec : r.rounds) CHECK(rec.participants == 2);

    layout.clients[1].train = WindowSet{};
    const PretrainResult skipped = run_federated_pretraining(layout, tiny_fed(1));
    CHECK(skipped.warnings.size() == 1);
    CHECK(skipped.rounds[0].participants == 3);

    FedConfig bad = tiny_fed(1);
    bad.client_fraction = 0.1;
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
    bad = tiny_fed(0);
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
}

TEST_CASE("checkpoints are written every k rounds") {
    const auto dir = std::filesystem::temp_directory_path() / "fedae_test_checkpoints";
    std::filesystem::remove_all(dir);
    FedConfig cfg = tiny_fed(4);
    cfg.checkpoint_every = 2;
    cfg.checkpoint_dir = dir;
    const PretrainResult r = run_federated_pretraining(tiny_layout(5), cfg);
    CHECK(std::filesystem::exists(dir / "round_0002.faes"));
    CHECK(std::filesystem::exists(dir / "round_0004.faes"));
    CHECK_FALSE(std::filesystem::exists(dir / "round_0001.faes"));
    CHECK(load_params(dir / "round_0004.faes") == r.params);
}

TEST_CASE("balanced class weights") {
    std::vector<int> labels(100, 0);
    std::fill(labels.begin() + 90, labels.end(), 1);
    const auto w = balanced_class_weights(labels);
    CHECK(w[0] == doctest::Approx(100.0 / 180.0));
    CHECK(w[1] == doctest::Approx(5.0));
    CHECK(w[2] == 0.0);

    const std::vector<int> even{3, 4, 3, 4};
    const auto e = balanced_class_weights(even);
    CHECK(e[3] == 1.0);
    CHECK(e[4] == 1.0);
}

TEST_CASE("fine-tuning contracts") {
    const FederationLayout layout = tiny_layout(6);
    const ParamSet ae = build_autoencoder({}, 7);
    FineTuneConfig cfg;
    cfg.epochs = 3;
    cfg.batch = 16;
    const FineTuneResult frozen = fine_tune(ae, layout.server_labeled, cfg);
    CHECK(frozen.epoch_losses.size() == 3);
    for (const auto& e : frozen.classifier.entries()) {
        if (is_encoder_param(e.name)) CHECK(e.tensor == ae.at(e.name));
    }
    CHECK(fine_tune(ae, layout.server_labeled, cfg).classifier == frozen.classifier);

    cfg.freeze_encoder = false;
    const FineTuneResult open = fine_tune(ae, layout.server_labeled, cfg);
    CHECK_FALSE(open.classifier.at("encoder.conv0.weight") == ae.at("encoder.conv0.weight"));
    CHECK(open.classifier.same_structure(frozen.classifier));

    WindowSet one_class = layout.server_labeled;
    std::fill(one_class.labels->begin(), one_class.labels->end(), 2);
    CHECK_THROWS_AS(fine_tune(ae, one_class, cfg), DataError);
}

TEST_CASE("all arms produce the same classifier structure") {
    const FederationLayout layout = tiny_layout(7);
    const FedConfig fed = tiny_fed(1);
    FineTuneConfig ft;
    ft.epochs = 2;
    const auto conv = run_centralized_baseline(layout, BaselineMode::Conventional, fed, ft);
    const auto conv_ae = run_centralized_baseline(layout, BaselineMode::ConventionalPlusAe, fed, ft);
    CHECK_FALSE(conv.pretraining.has_value());
    REQUIRE(conv_ae.pretraining.has_value());
    CHECK(conv_ae.pretraining->rounds.size() == 1);
    CHECK(conv_ae.pretraining->rounds[0].bytes_down == 0);
    const PretrainResult fl = run_federated_pretraining(layout, fed);
    const FineTuneResult fl_ft = fine_tune(fl.params, layout.server_labeled, ft);
    CHECK(conv.fine_tune.classifier.same_structure(fl_ft.classifier));
    CHECK(conv_ae.fine_tune.classifier.same_structure(fl_ft.classifier));
}

TEST_CASE("parallel_for rethrows the first failing index") {
    std::vector<int> hits(10, 0);
    parallel_for(10, 3, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    try {
        parallel_for(10, 4, [](std::size_t i) {
            if (i == 7 || i == 3) throw std::runtime_error("task " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "task 3");
    }
}
