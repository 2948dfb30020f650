#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedae/data.hpp"
#include "fedae/federation.hpp"
#include "fedae/metrics.hpp"
#include "fedae/models.hpp"

namespace fedae {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Arm { FlAe, Conventional, ConventionalAe };

std::string_view arm_name(Arm arm);
Arm arm_from_name(std::string_view name);
/// Row label used in comparison tables.
std::string_view arm_title(Arm arm);

enum class DataSource { Synthetic, Files };

struct DataConfig {
    DataSource source = DataSource::Synthetic;
    SynthConfig synthetic = SynthConfig::reference();
    std::filesystem::path manifest;
};

struct ExperimentConfig {
    Arm arm = Arm::FlAe;
    DataConfig data;
    FedConfig fed;
    FineTuneConfig finetune;
    AutoencoderSpec model;
    std::filesystem::path output_dir = "run";
    std::uint64_t seed = 0;
    bool export_embeddings = false;

    /// Copies `seed` into the fed and finetune sections.
    void propagate_seed();
    /// Throws ConfigError. Federation checks that need the client count run later.
    void validate() const;
};

/// Parses a config document. Unknown keys and wrong types throw ConfigError.
/// Relative manifest paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The fully resolved config. `workers` is left out so echoes do not depend on it.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Client windows, before partitioning: generated or loaded from the manifest.
std::vector<WindowSet> load_clients(const ExperimentConfig& cfg);
FederationLayout load_layout(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const EvalReport& report, Arm arm, const nlohmann::json& config_echo);

void write_rounds_csv(std::ostream& out, std::span<const RoundRecord> rounds);
void write_finetune_csv(std::ostream& out, std::span<const double> losses);

struct RunOutcome {
    EvalReport report;
    std::vector<RoundRecord> rounds;
    std::vector<double> finetune_losses;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> files;  // written, relative to output_dir
};

/// Runs one arm end to end and writes every artifact into cfg.output_dir.
/// Progress lines go to `log` when it is non-null.
RunOutcome run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// One FWIN file per client plus manifest.json in cfg.output_dir.
/// Returns the manifest path.
std::filesystem::path generate_dataset(const ExperimentConfig& cfg);

struct CompareTable {
    std::vector<std::string> columns;  // "Combined" first, then source tags
    std::vector<std::string> arms;
    std::vector<std::vector<double>> values;  // macro F1 in [0, 1], [arm][column]
};

/// Rejects reports that are malformed or disagree on the dataset tags.
CompareTable compare_reports(std::span<const nlohmann::json> reports);
/// Percentages with two decimals; the maximum of each column is wrapped in **.
std::string render_compare_text(const CompareTable& table);
void write_compare_csv(std::ostream& out, const CompareTable& table);

}  // namespace fedae
