#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedae/experiment.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

struct RunFlags {
    std::string config;
    std::string arm;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> rounds;
    std::string out;
    bool export_embeddings = false;
};

fedae::ExperimentConfig resolve(const RunFlags& f) {
    fedae::ExperimentConfig cfg = f.config.empty() ? fedae::ExperimentConfig{} : fedae::load_experiment_config(f.config);
    if (!f.arm.empty()) cfg.arm = fedae::arm_from_name(f.arm);
    if (f.seed) cfg.seed = *f.seed;
    if (f.workers) cfg.fed.workers = *f.workers;
    if (f.rounds) cfg.fed.rounds = *f.rounds;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.export_embeddings) cfg.export_embeddings = true;
    cfg.propagate_seed();
    cfg.validate();
    return cfg;
}

int cmd_run(const RunFlags& flags) {
    const fedae::ExperimentConfig cfg = resolve(flags);
    const fedae::RunOutcome outcome = fedae::run_experiment(cfg, &std::cerr);
    std::fprintf(stderr, "combined macro-F1 %.4f\n", outcome.report.combined.macro_f1);
    for (const auto& [tag, r] : outcome.report.per_dataset) std::fprintf(stderr, "  %-12s %.4f\n", tag.c_str(), r.macro_f1);
    std::cerr << "wrote " << outcome.files.size() << " files to " << cfg.output_dir.string() << '\n';
    return kOk;
}

int cmd_generate(const RunFlags& flags) {
    const fedae::ExperimentConfig cfg = resolve(flags);
    const auto manifest = fedae::generate_dataset(cfg);
    std::cerr << "wrote " << manifest.string() << '\n';
    return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out) {
    std::vector<nlohmann::json> reports;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw fedae::DataError("cannot open report '" + p + "'");
        try {
            reports.push_back(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw fedae::DataError("report '" + p + "' is not valid JSON: " + e.what());
        }
    }
    const fedae::CompareTable table = fedae::compare_reports(reports);
    const std::string text = fedae::render_compare_text(table);
    std::cout << text;
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream txt(std::filesystem::path(out) / "compare.md", std::ios::binary);
        std::ofstream csv(std::filesystem::path(out) / "compare.csv", std::ios::binary);
        if (!txt || !csv) throw fedae::DataError("cannot write comparison files to '" + out + "'");
        txt << text;
        fedae::write_compare_csv(csv, table);
        if (!txt || !csv) throw fedae::DataError("failed writing comparison files to '" + out + "'");
    }
    return kOk;
}

void add_common(CLI::App* sub, RunFlags& f) {
    sub->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Global seed");
    sub->add_option("--out", f.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated autoencoder pretraining and fine-tuning simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fedae::kVersion));

    RunFlags gen_flags;
    auto* gen = app.add_subcommand("generate", "Write synthetic client files and a manifest");
    add_common(gen, gen_flags);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run one experimental arm and write its reports");
    add_common(run, run_flags);
    run->add_option("--arm", run_flags.arm, "fl_ae, conventional or conventional_ae");
    run->add_option("--workers", run_flags.workers, "Client training threads")->check(CLI::PositiveNumber);
    run->add_option("--rounds", run_flags.rounds, "Communication rounds")->check(CLI::PositiveNumber);
    run->add_flag("--export-embeddings", run_flags.export_embeddings, "Write latent codes of the test windows");

    std::vector<std::string> report_paths;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Tabulate macro F1 of several reports");
    compare->add_option("reports", report_paths, "report.json files")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", compare_out, "Directory for compare.md and compare.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) return cmd_generate(gen_flags);
        if (*run) return cmd_run(run_flags);
        if (*compare) return cmd_compare(report_paths, compare_out);
    } catch (const fedae::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const fedae::ShapeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const fedae::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
