#include "fedae/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "fedae/optim.hpp"
#include "fedae/random.hpp"

namespace fedae {
namespace {

constexpr std::size_t kEvalBatch = 128;

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

/// One SGD pass over `windows` in a seeded order.
double reconstruction_epoch(ParamSet& params, const WindowSet& windows, OptimizerState& opt, std::size_t batch,
                            std::uint64_t seed, const AutoencoderSpec& spec) {
    std::vector<std::size_t> order = iota_indices(windows.size());
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t count = std::min(batch, order.size() - start);
        const Tensor x = windows.batch(std::span<const std::size_t>(order.data() + start, count));
        Tape<float> tape;
        ParamBinding p(tape, params);
        const Var<float> input = tape.constant(x);
        const Var<float> recon = graph::decoder(p, graph::encoder(p, input, spec), spec);
        const Var<float> loss = ops::mse_loss(recon, input);
        const double value = loss.value().item();
        require_finite(value, "reconstruction loss");
        tape.backward(loss);
        p.write_grads(params);
        optimizer_step(params, opt);
        total += value;
        ++batches;
    }
    return batches ? total / static_cast<double>(batches) : 0.0;
}

std::string checkpoint_name(int round) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "round_%04d.faes", round);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void FedConfig::validate(std::size_t n_clients) const {
    if (rounds < 1 || local_epochs < 1 || client_batch < 1) {
        throw ConfigError("fed: rounds, local_epochs and client_batch must be positive");
    }
    if (!(client_lr >= 0.0) || !std::isfinite(client_lr)) throw ConfigError("fed: client_lr must be >= 0");
    if (!(client_fraction > 0.0 && client_fraction <= 1.0)) throw ConfigError("fed: client_fraction must be in (0,1]");
    if (workers < 1) throw ConfigError("fed: workers must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("fed: checkpoint_every must be >= 0");
    if (n_clients > 0 && client_fraction * static_cast<double>(n_clients) < 1.0) {
        throw ConfigError("fed: client_fraction selects no client");
    }
}

std::size_t FedConfig::participants(std::size_t n_clients) const {
    const auto m = static_cast<std::size_t>(std::floor(client_fraction * static_cast<double>(n_clients) + 1e-9));
    return std::clamp<std::size_t>(m, 1, n_clients);
}

void FineTuneConfig::validate() const {
    if (epochs < 1 || batch < 1) throw ConfigError("finetune: epochs and batch must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("finetune: lr must be positive");
}

ParamSet fedavg_aggregate(std::span<const ParamSet> models, std::span<const double> weights) {
    if (models.empty()) throw ShapeError("fedavg: no models to aggregate");
    if (models.size() != weights.size()) throw ShapeError("fedavg: one weight per model is required");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ShapeError("fedavg: weights must be positive and finite");
        total += w;
    }
    for (std::size_t i = 1; i < models.size(); ++i) {
        if (!models[i].same_structure(models[0])) {
            throw ShapeError("fedavg: model " + std::to_string(i) + " differs structurally from model 0");
        }
    }
    ParamSet out = models[0];
    out.clear_grads();
    std::vector<double> acc;
    for (std::size_t e = 0; e < out.size(); ++e) {
        auto dst = out.entries()[e].tensor.values();
        acc.assign(dst.size(), 0.0);
        for (std::size_t m = 0; m < models.size(); ++m) {
            const double coef = weights[m] / total;
            const auto src = models[m].entries()[e].tensor.values();
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coef * static_cast<double>(src[i]);
        }
        for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i]);
    }
    return out;
}

double reconstruction_loss(const ParamSet& params, const WindowSet& windows, const AutoencoderSpec& spec) {
    if (windows.empty()) throw DataError("reconstruction_loss: no windows");
    const std::vector<std::size_t> all = iota_indices(windows.size());
    double sq = 0.0;
    for (std::size_t start = 0; start < all.size(); start += kEvalBatch) {
        const std::size_t count = std::min(kEvalBatch, all.size() - start);
        const Tensor x = windows.batch(std::span<const std::size_t>(all.data() + start, count));
        const AeOutput out = ae_forward(params, x, spec);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = static_cast<double>(out.reconstruction[i]) - static_cast<double>(x[i]);
            sq += d * d;
        }
    }
    return sq / static_cast<double>(windows.values.size());
}

std::uint64_t client_round_seed(std::uint64_t global_seed, int round, const std::string& client_id) {
    return derive_seed(global_seed, static_cast<std::uint64_t>(round), client_id);
}

LocalResult local_train(const ParamSet& params, const ClientShard& shard, const FedConfig& cfg,
                        std::uint64_t round_seed, const AutoencoderSpec& spec) {
    if (shard.train.empty()) throw DataError("local_train: client '" + shard.client_id + "' has no training windows");
    check_autoencoder_params(params, spec);
    LocalResult result{params, std::nullopt};
    result.params.clear_grads();
    result.params.set_requires_grad(true);
    OptimizerState opt = OptimizerState::sgd(cfg.client_lr);
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        reconstruction_epoch(result.params, shard.train, opt, static_cast<std::size_t>(cfg.client_batch),
                             derive_seed(round_seed, static_cast<std::uint64_t>(epoch)), spec);
    }
    result.params.clear_grads();
    if (!shard.test.empty()) {
        result.test_loss = reconstruction_loss(result.params, shard.test, spec);
        require_finite(*result.test_loss, "client '" + shard.client_id + "' test loss");
    }
    return result;
}

ParamSet initial_autoencoder(const FedConfig& cfg, const AutoencoderSpec& spec) {
    return build_autoencoder(spec, derive_seed(cfg.seed, 0, "autoencoder-init"));
}

PretrainResult run_federated_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                         const AutoencoderSpec& spec, const RoundObserver& observer) {
    return run_federated_pretraining(layout, cfg, initial_autoencoder(cfg, spec), spec, observer);
}

PretrainResult run_federated_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                         const ParamSet& initial, const AutoencoderSpec& spec,
                                         const RoundObserver& observer) {
    if (layout.clients.empty()) throw DataError("federated pretraining needs at least one client");
    check_autoencoder_params(initial, spec);

    PretrainResult result;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < layout.clients.size(); ++i) {
        if (layout.clients[i].train.empty()) {
            result.warnings.push_back("client '" + layout.clients[i].client_id +
                                      "' has no unlabeled windows and is skipped");
        } else {
            eligible.push_back(i);
        }
    }
    if (eligible.empty()) throw DataError("federated pretraining: every client shard is empty");
    cfg.validate(eligible.size());
    if (cfg.checkpoint_every > 0) std::filesystem::create_directories(cfg.checkpoint_dir);

    result.params = initial;
    result.params.clear_grads();
    const std::uint64_t model_bytes = result.params.byte_size();
    const std::size_t per_round = cfg.participants(eligible.size());

    for (int round = 1; round <= cfg.rounds; ++round) {
        std::vector<std::size_t> chosen = eligible;
        if (per_round < eligible.size()) {
            Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(round), "participants"));
            rng.shuffle(std::span<std::size_t>(chosen));
            chosen.resize(per_round);
            std::sort(chosen.begin(), chosen.end());
        }

        std::vector<LocalResult> locals(chosen.size());
        parallel_for(chosen.size(), cfg.workers, [&](std::size_t k) {
            const ClientShard& shard = layout.clients[chosen[k]];
            locals[k] = local_train(result.params, shard, cfg, client_round_seed(cfg.seed, round, shard.client_id),
                                    spec);
        });

        std::vector<ParamSet> models;
        std::vector<double> weights;
        std::vector<double> losses;
        models.reserve(chosen.size());
        for (std::size_t k = 0; k < chosen.size(); ++k) {
            models.push_back(std::move(locals[k].params));
            weights.push_back(static_cast<double>(layout.clients[chosen[k]].train.size()));
            if (locals[k].test_loss) losses.push_back(*locals[k].test_loss);
        }
        result.params = fedavg_aggregate(models, weights);

        RoundRecord rec;
        rec.round = round;
        rec.participants = chosen.size();
        rec.client_loss_mean = mean_of(losses);
        rec.client_loss_std = population_std(losses, rec.client_loss_mean);
        rec.server_loss = layout.server_test.empty() ? rec.client_loss_mean
                                                     : reconstruction_loss(result.params, layout.server_test, spec);
        require_finite(rec.server_loss, "server reconstruction loss");
        rec.bytes_down = chosen.size() * model_bytes;
        rec.bytes_up = chosen.size() * model_bytes;
        result.rounds.push_back(rec);
        if (observer) observer(rec);
        if (cfg.checkpoint_every > 0 && round % cfg.checkpoint_every == 0) {
            save_params(cfg.checkpoint_dir / checkpoint_name(round), result.params);
        }
    }
    return result;
}

PretrainResult run_centralized_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                           const ParamSet& initial, const AutoencoderSpec& spec,
                                           const RoundObserver& observer) {
    cfg.validate(1);
    check_autoencoder_params(initial, spec);
    WindowSet pooled;
    for (const auto& c : layout.clients) pooled.values.insert(pooled.values.end(), c.train.values.begin(), c.train.values.end());
    if (pooled.empty()) throw DataError("centralized pretraining: no unlabeled windows");

    PretrainResult result;
    result.params = initial;
    result.params.clear_grads();
    result.params.set_requires_grad(true);
    OptimizerState opt = OptimizerState::sgd(cfg.client_lr);
    for (int round = 1; round <= cfg.rounds; ++round) {
        std::vector<double> epoch_losses;
        for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
            const std::uint64_t seed = derive_seed(client_round_seed(cfg.seed, round, "centralized"),
                                                   static_cast<std::uint64_t>(epoch));
            epoch_losses.push_back(reconstruction_epoch(result.params, pooled, opt,
                                                        static_cast<std::size_t>(cfg.client_batch), seed, spec));
        }
        result.params.clear_grads();
        RoundRecord rec;
        rec.round = round;
        rec.participants = 0;
        rec.client_loss_mean = epoch_losses.back();
        rec.client_loss_std = 0.0;
        rec.server_loss = layout.server_test.empty() ? rec.client_loss_mean
                                                     : reconstruction_loss(result.params, layout.server_test, spec);
        require_finite(rec.server_loss, "server reconstruction loss");
        result.rounds.push_back(rec);
        if (observer) observer(rec);
    }
    result.params.set_requires_grad(true);
    return result;
}

std::array<double, kNumClasses> balanced_class_weights(std::span<const int> labels) {
    std::array<std::size_t, kNumClasses> counts{};
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= kNumClasses) throw DataError("label outside [0,13)");
        ++counts[static_cast<std::size_t>(l)];
    }
    const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
    std::array<double, kNumClasses> weights{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] > 0) {
            weights[c] = static_cast<double>(labels.size()) / (present * static_cast<double>(counts[c]));
        }
    }
    return weights;
}

FineTuneResult fine_tune(const ParamSet& encoder_params, const WindowSet& server_labeled, const FineTuneConfig& cfg,
                         const AutoencoderSpec& spec) {
    return fine_tune_classifier(
        build_classifier_from_encoder(encoder_params, derive_seed(cfg.seed, 0, "classifier-head"), spec),
        server_labeled, cfg, spec);
}

FineTuneResult fine_tune_classifier(ParamSet classifier, const WindowSet& server_labeled, const FineTuneConfig& cfg,
                                    const AutoencoderSpec& spec) {
    cfg.validate();
    check_classifier_params(classifier, spec);
    if (!server_labeled.has_labels() || server_labeled.empty()) {
        throw DataError("fine_tune: the server pool is empty or unlabeled");
    }
    const std::vector<int>& labels = *server_labeled.labels;
    FineTuneResult result;
    result.class_weights = balanced_class_weights(labels);
    const auto present = std::count_if(result.class_weights.begin(), result.class_weights.end(),
                                       [](double w) { return w > 0.0; });
    if (present < 2) throw DataError("fine_tune: the labeled pool must contain at least two classes");
    std::vector<float> weights(result.class_weights.begin(), result.class_weights.end());

    for (auto& e : classifier.entries()) {
        e.tensor.clear_grad();
        e.tensor.set_requires_grad(!(cfg.freeze_encoder && is_encoder_param(e.name)));
    }

    // A frozen encoder maps each window to a fixed latent, so encode once.
    std::optional<Tensor> latents;
    if (cfg.freeze_encoder) {
        std::vector<float> codes;
        const std::vector<std::size_t> all = iota_indices(server_labeled.size());
        for (std::size_t start = 0; start < all.size(); start += kEvalBatch) {
            const std::size_t count = std::min(kEvalBatch, all.size() - start);
            const Tensor z = encode(classifier, server_labeled.batch(std::span(all.data() + start, count)), spec);
            codes.insert(codes.end(), z.values().begin(), z.values().end());
        }
        latents = Tensor(Shape{server_labeled.size(), spec.latent_dim}, std::move(codes));
    }

    OptimizerState opt = OptimizerState::adam(cfg.lr);
    std::vector<std::size_t> order = iota_indices(server_labeled.size());
    const auto batch = static_cast<std::size_t>(cfg.batch);
    std::vector<int> batch_labels;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), "finetune-epoch"));
        rng.shuffle(std::span<std::size_t>(order));
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            batch_labels.clear();
            for (std::size_t i : idx) batch_labels.push_back(labels[i]);

            Tape<float> tape;
            ParamBinding p(tape, classifier);
            Var<float> latent;
            if (latents) {
                std::vector<float> rows(count * spec.latent_dim);
                for (std::size_t r = 0; r < count; ++r) {
                    std::copy_n(latents->data() + idx[r] * spec.latent_dim, spec.latent_dim,
                                rows.data() + r * spec.latent_dim);
                }
                latent = tape.constant(Tensor(Shape{count, spec.latent_dim}, std::move(rows)));
            } else {
                latent = graph::encoder(p, tape.constant(server_labeled.batch(idx)), spec);
            }
            const Var<float> logits = graph::classifier_head(p, latent);
            const Var<float> loss = ops::weighted_softmax_cross_entropy<float>(logits, batch_labels, weights);
            const double value = loss.value().item();
            require_finite(value, "classification loss");
            tape.backward(loss);
            p.write_grads(classifier);
            optimizer_step(classifier, opt);
            total += value;
            ++batches;
        }
        result.epoch_losses.push_back(total / static_cast<double>(batches));
    }
    classifier.clear_grads();
    classifier.set_requires_grad(true);
    result.classifier = std::move(classifier);
    return result;
}

BaselineResult run_centralized_baseline(const FederationLayout& layout, BaselineMode mode, const FedConfig& fed,
                                        const FineTuneConfig& ft, const AutoencoderSpec& spec,
                                        const RoundObserver& observer) {
    BaselineResult result;
    if (mode == BaselineMode::Conventional) {
        // Supervised only: randomly initialized encoder, trained end to end.
        FineTuneConfig supervised = ft;
        supervised.freeze_encoder = false;
        ParamSet classifier = build_classifier_from_encoder(initial_autoencoder(fed, spec),
                                                            derive_seed(ft.seed, 0, "classifier-head"), spec);
        result.fine_tune = fine_tune_classifier(std::move(classifier), layout.server_labeled, supervised, spec);
        return result;
    }
    result.pretraining = run_centralized_pretraining(layout, fed, initial_autoencoder(fed, spec), spec, observer);
    result.fine_tune = fine_tune(result.pretraining->params, layout.server_labeled, ft, spec);
    return result;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
    std::vector<std::exception_ptr> errors(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace fedae
