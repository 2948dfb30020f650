#include "fedae/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace fedae {
namespace {

constexpr std::size_t kPredictBatch = 128;

}  // namespace

std::int64_t ConfusionMatrix::row_total(std::size_t c) const {
    return std::accumulate(counts[c].begin(), counts[c].end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::column_total(std::size_t c) const {
    std::int64_t s = 0;
    for (const auto& row : counts) s += row[c];
    return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        for (std::size_t c = 0; c < kNumClasses; ++c) counts[r][c] += other.counts[r][c];
    }
    n += other.n;
    return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw ShapeError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                         std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= static_cast<int>(kNumClasses) || p < 0 || p >= static_cast<int>(kNumClasses)) {
            throw ShapeError("confusion: label outside [0,13) at position " + std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        ++cm.n;
    }
    return cm;
}

std::array<ClassScores, kNumClasses> per_class_scores(const ConfusionMatrix& cm) {
    std::array<ClassScores, kNumClasses> scores{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const std::int64_t support = cm.row_total(c);
        const std::int64_t predicted = cm.column_total(c);
        ClassScores& s = scores[c];
        s.support = support;
        s.present = support > 0;
        s.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
        s.recall = support > 0 ? tp / static_cast<double>(support) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    }
    return scores;
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.n == 0) throw ShapeError("macro_f1: empty confusion matrix");
    const auto scores = per_class_scores(cm);
    double sum = 0.0;
    int present = 0;
    for (const auto& s : scores) {
        if (!s.present) continue;
        sum += s.f1;
        ++present;
    }
    return sum / present;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    ClassificationReport r;
    r.confusion = cm;
    r.per_class = per_class_scores(cm);
    r.macro_f1 = macro_f1(cm);
    return r;
}

std::vector<int> predict(const ParamSet& classifier, const WindowSet& windows, const AutoencoderSpec& spec) {
    std::vector<int> out;
    out.reserve(windows.size());
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t start = 0; start < idx.size(); start += kPredictBatch) {
        const std::size_t count = std::min(kPredictBatch, idx.size() - start);
        const Tensor logits = classifier_forward(classifier, windows.batch(std::span(idx.data() + start, count)), spec);
        const std::size_t classes = logits.dim(1);
        for (std::size_t r = 0; r < count; ++r) {
            const float* row = logits.data() + r * classes;
            out.push_back(static_cast<int>(std::max_element(row, row + classes) - row));
        }
    }
    return out;
}

EvalReport per_dataset_breakdown(const ParamSet& classifier, const FederationLayout& layout,
                                 const AutoencoderSpec& spec) {
    const std::vector<std::string> tags = layout.sources();
    return per_dataset_breakdown(classifier, layout, tags, spec);
}

EvalReport per_dataset_breakdown(const ParamSet& classifier, const FederationLayout& layout,
                                 std::span<const std::string> tags, const AutoencoderSpec& spec) {
    if (layout.server_test.empty() || !layout.server_test.has_labels()) {
        throw DataError("per_dataset_breakdown: the layout has no labeled test windows");
    }
    const std::vector<std::string> known = layout.sources();
    for (const auto& tag : tags) {
        if (std::find(known.begin(), known.end(), tag) == known.end()) {
            throw DataError("per_dataset_breakdown: no clients carry source tag '" + tag + "'");
        }
    }
    const std::vector<int> pred = predict(classifier, layout.server_test, spec);
    const std::vector<int>& truth = *layout.server_test.labels;
    EvalReport report;
    report.combined = classification_report(confusion(truth, pred));
    for (const auto& tag : tags) {
        std::vector<int> t, p;
        for (std::size_t i : layout.test_indices(tag)) {
            t.push_back(truth[i]);
            p.push_back(pred[i]);
        }
        if (t.empty()) throw DataError("per_dataset_breakdown: source '" + tag + "' has no test windows");
        report.per_dataset[tag] = classification_report(confusion(t, p));
    }
    return report;
}

std::vector<EmbeddingRow> export_embeddings(const ParamSet& encoder, const WindowSet& windows,
                                            const AutoencoderSpec& spec) {
    std::vector<EmbeddingRow> rows;
    rows.reserve(windows.size());
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t start = 0; start < idx.size(); start += kPredictBatch) {
        const std::size_t count = std::min(kPredictBatch, idx.size() - start);
        const Tensor z = encode(encoder, windows.batch(std::span(idx.data() + start, count)), spec);
        const std::size_t d = z.dim(1);
        for (std::size_t r = 0; r < count; ++r) {
            EmbeddingRow row;
            row.client_id = windows.client_id;
            if (windows.labels) row.label = (*windows.labels)[start + r];
            row.latent.assign(z.data() + r * d, z.data() + (r + 1) * d);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_embeddings_csv(std::ostream& out, std::span<const EmbeddingRow> rows) {
    const bool labeled = std::any_of(rows.begin(), rows.end(), [](const EmbeddingRow& r) { return r.label.has_value(); });
    const std::size_t d = rows.empty() ? 0 : rows.front().latent.size();
    out << "client_id";
    if (labeled) out << ",label";
    for (std::size_t i = 0; i < d; ++i) out << ",z" << i;
    out << '\n';
    for (const auto& r : rows) {
        out << r.client_id;
        if (labeled) out << ',' << (r.label ? activity_code(*r.label) : std::string_view{});
        for (float v : r.latent) out << ',' << v;
        out << '\n';
    }
}

std::map<std::string, std::array<std::int64_t, kNumClasses>> class_distribution(const FederationLayout& layout) {
    std::map<std::string, std::array<std::int64_t, kNumClasses>> dist;
    for (const auto& c : layout.clients) {
        auto& counts = dist[c.source];
        for (int l : c.train_ground_truth) ++counts[static_cast<std::size_t>(l)];
        if (c.test.labels) {
            for (int l : *c.test.labels) ++counts[static_cast<std::size_t>(l)];
        }
    }
    if (layout.server_labeled.labels) {
        const auto& labels = *layout.server_labeled.labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            ++dist[layout.server_labeled_sources.at(i)][static_cast<std::size_t>(labels[i])];
        }
    }
    return dist;
}

void write_class_distribution_csv(std::ostream& out,
                                  const std::map<std::string, std::array<std::int64_t, kNumClasses>>& dist) {
    out << "source";
    for (ActivityLabel l : all_activities()) out << ',' << activity_code(l);
    out << '\n';
    for (const auto& [tag, counts] : dist) {
        out << tag;
        for (auto v : counts) out << ',' << v;
        out << '\n';
    }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true\\pred";
    for (ActivityLabel l : all_activities()) out << ',' << activity_code(l);
    out << '\n';
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        out << activity_code(static_cast<int>(r));
        for (std::size_t c = 0; c < kNumClasses; ++c) out << ',' << cm.counts[r][c];
        out << '\n';
    }
}

}  // namespace fedae
