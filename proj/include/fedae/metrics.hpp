#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedae/data.hpp"
#include "fedae/models.hpp"

namespace fedae {

/// Counts over the 13-class vocabulary; rows are true classes, columns predictions.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};
    std::int64_t n = 0;

    std::int64_t row_total(std::size_t c) const;
    std::int64_t column_total(std::size_t c) const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;  // true samples of the class
    bool present = false;      // support > 0
};

std::array<ClassScores, kNumClasses> per_class_scores(const ConfusionMatrix& cm);

/// Mean F1 over classes present in the ground truth. Zero denominators
/// count as 0. Throws on an empty matrix.
double macro_f1(const ConfusionMatrix& cm);

struct ClassificationReport {
    double macro_f1 = 0.0;
    std::array<ClassScores, kNumClasses> per_class{};
    ConfusionMatrix confusion;
};

ClassificationReport classification_report(const ConfusionMatrix& cm);

struct EvalReport {
    ClassificationReport combined;
    std::map<std::string, ClassificationReport> per_dataset;
};

/// Argmax predictions of a classifier over a window set.
std::vector<int> predict(const ParamSet& classifier, const WindowSet& windows, const AutoencoderSpec& spec = {});

/// Combined report over the union test set plus one report per source tag.
EvalReport per_dataset_breakdown(const ParamSet& classifier, const FederationLayout& layout,
                                 const AutoencoderSpec& spec = {});
/// Restricts the per-dataset part to `tags`; an unknown tag is rejected.
EvalReport per_dataset_breakdown(const ParamSet& classifier, const FederationLayout& layout,
                                 std::span<const std::string> tags, const AutoencoderSpec& spec = {});

struct EmbeddingRow {
    std::string client_id;
    std::optional<int> label;
    std::vector<float> latent;
};

std::vector<EmbeddingRow> export_embeddings(const ParamSet& encoder, const WindowSet& windows,
                                            const AutoencoderSpec& spec = {});
/// client_id[,label],z0..z{d-1}; the label column appears when any row has one.
void write_embeddings_csv(std::ostream& out, std::span<const EmbeddingRow> rows);

/// Ground-truth counts per class for each source tag, over every window of
/// the layout (client train, client test, and server pool).
std::map<std::string, std::array<std::int64_t, kNumClasses>> class_distribution(const FederationLayout& layout);
void write_class_distribution_csv(std::ostream& out,
                                  const std::map<std::string, std::array<std::int64_t, kNumClasses>>& dist);

/// Header row and column of class codes.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

}  // namespace fedae
