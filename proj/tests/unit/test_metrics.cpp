#include <doctest.h>

#include <numeric>
#include <sstream>

#include "fedae/metrics.hpp"
#include "fedae/random.hpp"
#include "metric_oracle.hpp"

using namespace fedae;

namespace {

ConfusionMatrix from_cells(const std::vector<std::vector<std::int64_t>>& cells) {
    ConfusionMatrix cm;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            cm.counts[r][c] = cells[r][c];
            cm.n += cells[r][c];
        }
    }
    return cm;
}

}  // namespace

TEST_CASE("confusion counts") {
    const std::vector<int> t{0, 0, 1}, p{0, 1, 1};
    const ConfusionMatrix cm = confusion(t, p);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.n == 3);
    CHECK(cm.row_total(0) == 2);
    CHECK(cm.column_total(1) == 2);

    const ConfusionMatrix empty = confusion({}, {});
    CHECK(empty.n == 0);
    CHECK_THROWS(macro_f1(empty));

    const std::vector<int> short_p{0};
    CHECK_THROWS(confusion(t, short_p));
    const std::vector<int> bad{0, 0, 13};
    CHECK_THROWS(confusion(t, bad));

    ConfusionMatrix sum = cm;
    sum += cm;
    CHECK(sum.n == 6);
    CHECK(sum.counts[0][1] == 2);
}

TEST_CASE("macro f1 hand examples") {
    const std::vector<int> same{0, 3, 5, 5};
    CHECK(macro_f1(confusion(same, same)) == 1.0);
    CHECK(macro_f1(from_cells({{1, 1}, {0, 2}})) == doctest::Approx(0.733333).epsilon(1e-5));
    const std::vector<int> t{0, 0, 1, 1}, p(4, 0);
    CHECK(macro_f1(confusion(t, p)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("per-class scores use zero for empty denominators") {
    const std::vector<int> t{0, 0, 1}, p{2, 2, 1};
    const auto s = per_class_scores(confusion(t, p));
    CHECK(s[0].present);
    CHECK(s[0].precision == 0.0);
    CHECK(s[0].f1 == 0.0);
    CHECK_FALSE(s[2].present);
    CHECK(s[2].precision == 0.0);
    CHECK(s[1].f1 == 1.0);
    CHECK(macro_f1(confusion(t, p)) == 0.5);
}

TEST_CASE("macro f1 matches brute force on every short label vector") {
    const auto r = fedae::testing::exhaustive_macro_check(6, 3);
    CHECK(r.pairs == 9 + 81 + 729 + 6561 + 59049 + 531441);
    CHECK(r.exact_mismatches == 0);
    CHECK(r.rational_mismatches == 0);
    CHECK(r.invariant_failures == 0);
}

TEST_CASE("macro f1 is invariant under class relabeling") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(rng.below(13));
            p[i] = static_cast<int>(rng.below(13));
        }
        std::vector<int> perm(13);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<int>(perm));
        std::vector<int> tp(n), pp(n);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = perm[t[i]];
            pp[i] = perm[p[i]];
        }
        CHECK(macro_f1(confusion(t, p)) == doctest::Approx(macro_f1(confusion(tp, pp))).epsilon(1e-12));
    }
}

TEST_CASE("confusion csv") {
    const std::vector<int> t{0, 12}, p{12, 12};
    std::ostringstream out;
    write_confusion_csv(out, confusion(t, p));
    std::istringstream in(out.str());
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "true\\pred,W,U,D,ST,SD,L,J,R,BK,C,BS,T,SW");
    CHECK(first == "W,0,0,0,0,0,0,0,0,0,0,0,0,1");
    int lines = 2;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 14);
}

TEST_CASE("per-dataset breakdown partitions the test set") {
    SynthConfig cfg = SynthConfig::reference();
    for (auto& d : cfg.datasets) {
        d.min_windows = 30;
        d.max_windows = 40;
    }
    const FederationLayout layout = generate_synthetic_federation(cfg, 2);
    const ParamSet clf = build_classifier_from_encoder(build_autoencoder({}, 1), 2);
    const EvalReport r = per_dataset_breakdown(clf, layout);
    CHECK(r.per_dataset.size() == 4);
    std::int64_t n = 0;
    for (const auto& [tag, rep] : r.per_dataset) n += rep.confusion.n;
    CHECK(n == r.combined.confusion.n);
    CHECK(r.combined.confusion.n == static_cast<std::int64_t>(layout.server_test.size()));

    const std::vector<std::string> one{"uci"};
    CHECK(per_dataset_breakdown(clf, layout, one).per_dataset.size() == 1);
    const std::vector<std::string> missing{"nope"};
    CHECK_THROWS_AS(per_dataset_breakdown(clf, layout, missing), DataError);

    SynthConfig single = cfg;
    single.datasets.resize(1);
    single.datasets[0].clients = 3;
    const FederationLayout l1 = generate_synthetic_federation(single, 2);
    const EvalReport r1 = per_dataset_breakdown(clf, l1);
    REQUIRE(r1.per_dataset.size() == 1);
    CHECK(r1.per_dataset.begin()->second.confusion == r1.combined.confusion);
    CHECK(r1.per_dataset.begin()->second.macro_f1 == r1.combined.macro_f1);
}

TEST_CASE("embedding export") {
    SynthConfig cfg = SynthConfig::reference();
    cfg.datasets.resize(1);
    cfg.datasets[0].clients = 1;
    const auto clients = generate_synthetic_clients(cfg, 4);
    const ParamSet ae = build_autoencoder({}, 3);

    WindowSet twins = clients[0].subset(std::vector<std::size_t>{0, 0, 1});
    const auto rows = export_embeddings(ae, twins);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].latent == rows[1].latent);
    CHECK(rows[0].latent.size() == 128);
    CHECK(rows[0].client_id == clients[0].client_id);
    for (const auto& row : export_embeddings(ae, clients[0])) {
        for (float v : row.latent) CHECK(std::isfinite(v));
    }

    auto columns = [](const std::vector<EmbeddingRow>& rs) {
        std::ostringstream out;
        write_embeddings_csv(out, rs);
        std::istringstream in(out.str());
        std::string header;
        std::getline(in, header);
        return std::count(header.begin(), header.end(), ',') + 1;
    };
    CHECK(columns(rows) == 130);
    WindowSet unlabeled = twins;
    unlabeled.labels.reset();
    CHECK(columns(export_embeddings(ae, unlabeled)) == 129);
}
