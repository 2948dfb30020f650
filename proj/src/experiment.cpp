#include "fedae/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace fedae {
namespace {

using nlohmann::json;

/// Reads the members of one JSON object and rejects any key left unread.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    void read(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
            const auto x = v->get<std::int64_t>();
            if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(path(key) + ": out of range");
            out = static_cast<int>(x);
        }
    }
    template <std::unsigned_integral U>
    void read(const std::string& key, U& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
                throw ConfigError(path(key) + ": expected a non-negative integer");
            out = v->get<U>();
        }
    }
    void read(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void read(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void read(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

ActivityLabel parse_label(const json& v, const std::string& where) {
    try {
        if (v.is_string()) return activity_from_code(v.get<std::string>());
        if (v.is_number_integer()) return activity_from_index(v.get<int>());
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": expected an activity code");
}

SyntheticDataset parse_dataset(const json& j, const std::string& where) {
    ObjectReader r(j, where);
    SyntheticDataset d;
    r.read("tag", d.tag);
    r.read("clients", d.clients);
    r.read("min_windows", d.min_windows);
    r.read("max_windows", d.max_windows);
    if (const json* classes = r.find("classes")) {
        if (!classes->is_array()) throw ConfigError(r.path("classes") + ": expected an array");
        for (const auto& c : *classes) d.classes.push_back(parse_label(c, r.path("classes")));
    }
    if (const json* weights = r.find("class_weights")) {
        if (!weights->is_array()) throw ConfigError(r.path("class_weights") + ": expected an array");
        for (const auto& w : *weights) {
            if (!w.is_number()) throw ConfigError(r.path("class_weights") + ": expected numbers");
            d.class_weights.push_back(w.get<double>());
        }
    }
    r.finish();
    return d;
}

SynthConfig parse_synthetic(const json& j, const std::string& where) {
    ObjectReader r(j, where);
    std::string preset = "reference";
    r.read("preset", preset);
    SynthConfig cfg;
    if (preset == "reference") {
        cfg = SynthConfig::reference();
    } else if (preset == "full_scale") {
        cfg = SynthConfig::full_scale();
    } else {
        throw ConfigError(r.path("preset") + ": expected 'reference' or 'full_scale'");
    }
    r.read("noise", cfg.noise);
    r.read("client_shift", cfg.client_shift);
    if (const json* ds = r.find("datasets")) {
        if (!ds->is_array()) throw ConfigError(r.path("datasets") + ": expected an array");
        cfg.datasets.clear();
        for (std::size_t i = 0; i < ds->size(); ++i) {
            cfg.datasets.push_back(parse_dataset((*ds)[i], r.path("datasets") + "[" + std::to_string(i) + "]"));
        }
    }
    r.finish();
    return cfg;
}

DataConfig parse_data(const json& j, const std::filesystem::path& base_dir) {
    ObjectReader r(j, "data");
    DataConfig d;
    std::string source = "synthetic";
    r.read("source", source);
    if (source == "synthetic") {
        d.source = DataSource::Synthetic;
    } else if (source == "files") {
        d.source = DataSource::Files;
    } else {
        throw ConfigError("data.source: expected 'synthetic' or 'files'");
    }
    if (const json* s = r.find("synthetic")) d.synthetic = parse_synthetic(*s, "data.synthetic");
    std::string manifest;
    r.read("manifest", manifest);
    if (!manifest.empty()) {
        d.manifest = manifest;
        if (d.manifest.is_relative() && !base_dir.empty()) d.manifest = base_dir / d.manifest;
    }
    r.finish();
    return d;
}

void parse_fed(const json& j, FedConfig& fed) {
    ObjectReader r(j, "fed");
    r.read("rounds", fed.rounds);
    r.read("local_epochs", fed.local_epochs);
    r.read("client_lr", fed.client_lr);
    r.read("client_batch", fed.client_batch);
    r.read("client_fraction", fed.client_fraction);
    r.read("workers", fed.workers);
    r.read("checkpoint_every", fed.checkpoint_every);
    r.finish();
}

void parse_finetune(const json& j, FineTuneConfig& ft) {
    ObjectReader r(j, "finetune");
    r.read("epochs", ft.epochs);
    r.read("lr", ft.lr);
    r.read("batch", ft.batch);
    r.read("freeze_encoder", ft.freeze_encoder);
    r.finish();
}

void parse_model(const json& j, AutoencoderSpec& m) {
    ObjectReader r(j, "model");
    r.read("in_channels", m.in_channels);
    r.read("window_len", m.window_len);
    r.read("conv_filters", m.conv_filters);
    r.read("kernel", m.kernel);
    r.read("stride", m.stride);
    r.read("padding", m.padding);
    r.read("output_padding", m.output_padding);
    r.read("latent_dim", m.latent_dim);
    r.read("n_conv_layers", m.n_conv_layers);
    r.finish();
}

json synthetic_to_json(const SynthConfig& s) {
    json datasets = json::array();
    for (const auto& d : s.datasets) {
        json classes = json::array();
        for (ActivityLabel l : d.classes) classes.push_back(std::string(activity_code(l)));
        json ds = {{"tag", d.tag},
                   {"clients", d.clients},
                   {"min_windows", d.min_windows},
                   {"max_windows", d.max_windows},
                   {"classes", classes}};
        if (!d.class_weights.empty()) ds["class_weights"] = d.class_weights;
        datasets.push_back(std::move(ds));
    }
    return {{"noise", s.noise}, {"client_shift", s.client_shift}, {"datasets", datasets}};
}

json scores_to_json(const ClassificationReport& r) {
    json per_class = json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& s = r.per_class[c];
        per_class.push_back({{"class", std::string(activity_code(static_cast<int>(c)))},
                             {"precision", s.precision},
                             {"recall", s.recall},
                             {"f1", s.f1},
                             {"support", s.support},
                             {"present", s.present}});
    }
    return {{"macro_f1", r.macro_f1}, {"n", r.confusion.n}, {"per_class", per_class}};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw DataError("cannot create output directory '" + dir.string() + "'");
    }
}

class Artifacts {
public:
    explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) { ensure_dir(dir_); }

    template <class Fn>
    void write(const std::string& name, Fn&& fn) {
        const auto path = dir_ / name;
        auto out = open_out(path);
        fn(out);
        close_out(out, path);
        files.emplace_back(name);
    }

    std::vector<std::filesystem::path> files;

private:
    std::filesystem::path dir_;
};

}  // namespace

std::string_view arm_name(Arm arm) {
    switch (arm) {
        case Arm::FlAe: return "fl_ae";
        case Arm::Conventional: return "conventional";
        case Arm::ConventionalAe: return "conventional_ae";
    }
    return "fl_ae";
}

Arm arm_from_name(std::string_view name) {
    if (name == "fl_ae") return Arm::FlAe;
    if (name == "conventional") return Arm::Conventional;
    if (name == "conventional_ae") return Arm::ConventionalAe;
    throw ConfigError("unknown arm '" + std::string(name) + "' (expected fl_ae, conventional or conventional_ae)");
}

std::string_view arm_title(Arm arm) {
    switch (arm) {
        case Arm::FlAe: return "FL + Autoencoder";
        case Arm::Conventional: return "Conventional";
        case Arm::ConventionalAe: return "Conventional + Autoencoder";
    }
    return "";
}

void ExperimentConfig::propagate_seed() {
    fed.seed = seed;
    finetune.seed = seed;
}

void ExperimentConfig::validate() const {
    fed.validate(0);
    finetune.validate();
    model.validate();
    if (model.in_channels != kChannels || model.window_len != kWindowLen) {
        throw ConfigError("model: in_channels and window_len must match the 6x128 window format");
    }
    if (data.source == DataSource::Synthetic) {
        data.synthetic.validate();
    } else if (data.manifest.empty()) {
        throw ConfigError("data.manifest is required when data.source is 'files'");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
    ObjectReader r(j, "config");
    ExperimentConfig cfg;
    std::string arm = "fl_ae";
    r.read("arm", arm);
    cfg.arm = arm_from_name(arm);
    r.read("seed", cfg.seed);
    std::string out;
    r.read("output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
    r.read("export_embeddings", cfg.export_embeddings);
    if (const json* d = r.find("data")) cfg.data = parse_data(*d, base_dir);
    if (const json* f = r.find("fed")) parse_fed(*f, cfg.fed);
    if (const json* f = r.find("finetune")) parse_finetune(*f, cfg.finetune);
    if (const json* m = r.find("model")) parse_model(*m, cfg.model);
    r.finish();
    cfg.propagate_seed();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    // A run manifest carries its resolved config.
    if (j.is_object() && j.value("format", "") == "fedae-run-manifest" && j.contains("config")) {
        j = j["config"];
    }
    return parse_experiment_config(j, path.parent_path());
}

json config_to_json(const ExperimentConfig& cfg) {
    json data;
    if (cfg.data.source == DataSource::Synthetic) {
        data = {{"source", "synthetic"}, {"synthetic", synthetic_to_json(cfg.data.synthetic)}};
    } else {
        data = {{"source", "files"}, {"manifest", cfg.data.manifest.generic_string()}};
    }
    const auto& f = cfg.fed;
    const auto& t = cfg.finetune;
    const auto& m = cfg.model;
    return {
        {"arm", std::string(arm_name(cfg.arm))},
        {"seed", cfg.seed},
        {"export_embeddings", cfg.export_embeddings},
        {"data", data},
        {"fed",
         {{"rounds", f.rounds},
          {"local_epochs", f.local_epochs},
          {"client_lr", f.client_lr},
          {"client_batch", f.client_batch},
          {"client_fraction", f.client_fraction},
          {"checkpoint_every", f.checkpoint_every}}},
        {"finetune", {{"epochs", t.epochs}, {"lr", t.lr}, {"batch", t.batch}, {"freeze_encoder", t.freeze_encoder}}},
        {"model",
         {{"in_channels", m.in_channels},
          {"window_len", m.window_len},
          {"conv_filters", m.conv_filters},
          {"kernel", m.kernel},
          {"stride", m.stride},
          {"padding", m.padding},
          {"output_padding", m.output_padding},
          {"latent_dim", m.latent_dim},
          {"n_conv_layers", m.n_conv_layers}}},
    };
}

std::vector<WindowSet> load_clients(const ExperimentConfig& cfg) {
    if (cfg.data.source == DataSource::Synthetic) return generate_synthetic_clients(cfg.data.synthetic, cfg.seed);
    return load_manifest_clients(cfg.data.manifest);
}

FederationLayout load_layout(const ExperimentConfig& cfg) {
    return build_federation(load_clients(cfg), derive_seed(cfg.seed, 2));
}

json report_to_json(const EvalReport& report, Arm arm, const json& config_echo) {
    json per_dataset = json::object();
    for (const auto& [tag, r] : report.per_dataset) per_dataset[tag] = scores_to_json(r);
    json classes = json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) classes.push_back(std::string(activity_code(static_cast<int>(c))));
    json cells = json::array();
    for (const auto& row : report.combined.confusion.counts) {
        for (std::int64_t v : row) cells.push_back(v);
    }
    return {
        {"arm", std::string(arm_name(arm))},
        {"combined", scores_to_json(report.combined)},
        {"per_dataset", per_dataset},
        {"classes", classes},
        {"confusion", cells},
        {"macro_average", "classes present in the ground truth"},
        {"version", std::string(kVersion)},
        {"config_echo", config_echo},
    };
}

void write_rounds_csv(std::ostream& out, std::span<const RoundRecord> rounds) {
    out << "round,client_loss_mean,client_loss_std,server_loss,bytes_down,bytes_up\n";
    for (const auto& r : rounds) {
        out << r.round << ',' << fmt(r.client_loss_mean) << ',' << fmt(r.client_loss_std) << ','
            << fmt(r.server_loss) << ',' << r.bytes_down << ',' << r.bytes_up << '\n';
    }
}

void write_finetune_csv(std::ostream& out, std::span<const double> losses) {
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) out << i + 1 << ',' << fmt(losses[i]) << '\n';
}

RunOutcome run_experiment(const ExperimentConfig& input, std::ostream* log) {
    ExperimentConfig cfg = input;
    cfg.propagate_seed();
    cfg.validate();

    Artifacts art(cfg.output_dir);
    if (log) *log << "fedae: arm " << arm_name(cfg.arm) << ", seed " << cfg.seed << '\n';
    const FederationLayout layout = load_layout(cfg);
    cfg.fed.validate(layout.clients.size());
    if (log) {
        *log << "fedae: " << layout.clients.size() << " clients, " << layout.server_labeled.size()
             << " labeled server windows, " << layout.server_test.size() << " test windows\n";
    }

    if (cfg.fed.checkpoint_every > 0) {
        cfg.fed.checkpoint_dir = cfg.output_dir / "checkpoints";
        ensure_dir(cfg.fed.checkpoint_dir);
    }
    RoundObserver observer;
    if (log) {
        observer = [&](const RoundRecord& r) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "round %d/%d  client %.5f +- %.5f  server %.5f\n", r.round,
                          cfg.fed.rounds, r.client_loss_mean, r.client_loss_std, r.server_loss);
            *log << buf << std::flush;
        };
    }

    RunOutcome outcome;
    FineTuneResult ft;
    std::optional<ParamSet> autoencoder;
    switch (cfg.arm) {
        case Arm::FlAe: {
            PretrainResult pre = run_federated_pretraining(layout, cfg.fed, cfg.model, observer);
            ft = fine_tune(pre.params, layout.server_labeled, cfg.finetune, cfg.model);
            outcome.rounds = std::move(pre.rounds);
            outcome.warnings = std::move(pre.warnings);
            autoencoder = std::move(pre.params);
            break;
        }
        case Arm::Conventional:
        case Arm::ConventionalAe: {
            const auto mode = cfg.arm == Arm::Conventional ? BaselineMode::Conventional : BaselineMode::ConventionalPlusAe;
            BaselineResult b = run_centralized_baseline(layout, mode, cfg.fed, cfg.finetune, cfg.model, observer);
            ft = std::move(b.fine_tune);
            if (b.pretraining) {
                outcome.rounds = std::move(b.pretraining->rounds);
                outcome.warnings = std::move(b.pretraining->warnings);
                autoencoder = std::move(b.pretraining->params);
            }
            break;
        }
    }
    if (log && !ft.epoch_losses.empty()) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "fine-tune: %zu epochs, loss %.5f -> %.5f\n", ft.epoch_losses.size(),
                      ft.epoch_losses.front(), ft.epoch_losses.back());
        *log << buf;
    }

    outcome.report = per_dataset_breakdown(ft.classifier, layout, cfg.model);
    outcome.finetune_losses = ft.epoch_losses;
    const json echo = config_to_json(cfg);

    if (!outcome.rounds.empty()) art.write("rounds.csv", [&](std::ostream& o) { write_rounds_csv(o, outcome.rounds); });
    art.write("finetune_loss.csv", [&](std::ostream& o) { write_finetune_csv(o, outcome.finetune_losses); });
    art.write("report.json", [&](std::ostream& o) { o << report_to_json(outcome.report, cfg.arm, echo).dump(2) << '\n'; });
    art.write("confusion.csv", [&](std::ostream& o) { write_confusion_csv(o, outcome.report.combined.confusion); });
    art.write("class_distribution.csv",
              [&](std::ostream& o) { write_class_distribution_csv(o, class_distribution(layout)); });
    art.write("storage.csv", [&](std::ostream& o) {
        const StorageFootprint fp = storage_footprint(layout);
        o << "client_id,source,bytes\n";
        for (const auto& c : layout.clients) o << c.client_id << ',' << c.source << ',' << fp.per_client.at(c.client_id) << '\n';
    });
    if (cfg.export_embeddings) {
        art.write("embeddings.csv", [&](std::ostream& o) {
            std::vector<EmbeddingRow> rows;
            for (const auto& c : layout.clients) {
                if (c.test.empty()) continue;
                auto part = export_embeddings(ft.classifier, c.test, cfg.model);
                rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
            }
            write_embeddings_csv(o, rows);
        });
    }
    art.write("classifier.faes", [&](std::ostream& o) { write_params(o, ft.classifier); });
    if (autoencoder) art.write("autoencoder.faes", [&](std::ostream& o) { write_params(o, *autoencoder); });

    for (const auto& w : outcome.warnings) {
        if (log) *log << "warning: " << w << '\n';
    }

    json files = json::array();
    for (const auto& f : art.files) files.push_back(f.generic_string());
    files.push_back("run_manifest.json");
    const json manifest = {
        {"format", "fedae-run-manifest"},
        {"version", std::string(kVersion)},
        {"config", echo},
        {"seeds",
         {{"global", cfg.seed},
          {"partition", derive_seed(cfg.seed, 2)},
          {"autoencoder_init", derive_seed(cfg.seed, 0, "autoencoder-init")},
          {"classifier_head", derive_seed(cfg.finetune.seed, 0, "classifier-head")}}},
        {"workers", cfg.fed.workers},
        {"clients", layout.clients.size()},
        {"server_labeled_windows", layout.server_labeled.size()},
        {"test_windows", layout.server_test.size()},
        {"warnings", outcome.warnings},
        {"outputs", files},
    };
    art.write("run_manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    outcome.files = std::move(art.files);
    return outcome;
}

std::filesystem::path generate_dataset(const ExperimentConfig& input) {
    ExperimentConfig cfg = input;
    if (cfg.data.source != DataSource::Synthetic) throw ConfigError("generate needs data.source 'synthetic'");
    cfg.data.synthetic.validate();
    ensure_dir(cfg.output_dir);
    const std::vector<WindowSet> clients = generate_synthetic_clients(cfg.data.synthetic, cfg.seed);
    Manifest manifest;
    manifest.seed = cfg.seed;
    for (const auto& ws : clients) {
        const std::filesystem::path name = ws.client_id + ".fwin";
        save_windows(cfg.output_dir / name, ws);
        manifest.clients.push_back({ws.client_id, ws.source, name, "fwin", kTargetHz});
    }
    const auto path = cfg.output_dir / "manifest.json";
    write_manifest(path, manifest, clients);
    return path;
}

CompareTable compare_reports(std::span<const json> reports) {
    if (reports.empty()) throw ConfigError("compare: no reports given");
    CompareTable table;
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const json& r = reports[i];
        const std::string where = "compare: report " + std::to_string(i + 1);
        auto macro = [&](const json& section, const std::string& what) {
            if (!section.is_object() || !section.contains("macro_f1") || !section["macro_f1"].is_number()) {
                throw DataError(where + ": " + what + " has no numeric macro_f1");
            }
            const double v = section["macro_f1"].get<double>();
            if (!(v >= 0.0 && v <= 1.0)) throw DataError(where + ": " + what + " macro_f1 outside [0, 1]");
            return v;
        };
        if (!r.is_object() || !r.contains("arm") || !r["arm"].is_string()) throw DataError(where + ": missing arm");
        if (!r.contains("combined") || !r.contains("per_dataset") || !r["per_dataset"].is_object()) {
            throw DataError(where + ": missing combined or per_dataset section");
        }
        Arm arm;
        try {
            arm = arm_from_name(r["arm"].get<std::string>());
        } catch (const ConfigError& e) {
            throw DataError(where + ": " + e.what());
        }
        std::vector<std::string> these;
        for (const auto& [tag, section] : r["per_dataset"].items()) these.push_back(tag);
        if (i == 0) {
            tags = these;
        } else if (these != tags) {
            throw DataError(where + ": dataset tags differ from the first report");
        }
        std::vector<double> row{macro(r["combined"], "combined")};
        for (const auto& tag : tags) row.push_back(macro(r["per_dataset"][tag], "dataset '" + tag + "'"));
        table.arms.emplace_back(arm_title(arm));
        table.values.push_back(std::move(row));
    }
    table.columns.push_back("Combined");
    table.columns.insert(table.columns.end(), tags.begin(), tags.end());
    return table;
}

namespace {

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

}  // namespace

std::string render_compare_text(const CompareTable& table) {
    const std::size_t cols = table.columns.size();
    // Column maxima are taken on the printed hundredths so ties display as ties.
    std::vector<long long> best(cols, -1);
    for (const auto& row : table.values) {
        for (std::size_t c = 0; c < cols; ++c) best[c] = std::max(best[c], std::llround(row[c] * 10000.0));
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"Arm"};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    cells.push_back(header);
    for (std::size_t r = 0; r < table.arms.size(); ++r) {
        std::vector<std::string> line{table.arms[r]};
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string v = percent(table.values[r][c]);
            line.push_back(std::llround(table.values[r][c] * 10000.0) == best[c] ? "**" + v + "**" : v);
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(cols + 1, 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& line) {
        out << '|';
        for (std::size_t c = 0; c < line.size(); ++c) {
            out << ' ' << line[c] << std::string(width[c] - line[c].size(), ' ') << " |";
        }
        out << '\n';
    };
    emit(cells[0]);
    out << '|';
    for (std::size_t c = 0; c <= cols; ++c) out << std::string(width[c] + 2, '-') << '|';
    out << '\n';
    for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
    return out.str();
}

void write_compare_csv(std::ostream& out, const CompareTable& table) {
    out << "arm";
    for (const auto& c : table.columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < table.arms.size(); ++r) {
        out << table.arms[r];
        for (double v : table.values[r]) out << ',' << percent(v);
        out << '\n';
    }
}

}  // namespace fedae
