#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedae/data.hpp"
#include "fedae/models.hpp"
#include "fedae/param_set.hpp"

namespace fedae {

struct FedConfig {
    int rounds = 200;
    int local_epochs = 5;
    double client_lr = 0.01;
    int client_batch = 32;
    double client_fraction = 1.0;
    std::uint64_t seed = 0;
    /// Degree of parallelism for client training; never changes results.
    int workers = 1;
    /// Save the global model every k rounds when > 0.
    int checkpoint_every = 0;
    std::filesystem::path checkpoint_dir;

    void validate(std::size_t n_clients) const;
    /// Clients sampled per round.
    std::size_t participants(std::size_t n_clients) const;
};

struct RoundRecord {
    int round = 0;
    std::size_t participants = 0;
    double client_loss_mean = 0.0;  // across participating clients
    double client_loss_std = 0.0;   // population std across participating clients
    double server_loss = 0.0;       // aggregated model on the combined test set
    std::uint64_t bytes_down = 0;
    std::uint64_t bytes_up = 0;
};

struct FineTuneConfig {
    int epochs = 200;
    double lr = 0.00005;
    int batch = 64;
    bool freeze_encoder = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Weighted mean sum_i (w_i / sum w) * p_i of structurally identical models,
/// accumulated in model order.
ParamSet fedavg_aggregate(std::span<const ParamSet> models, std::span<const double> weights);

/// Mean squared reconstruction error over every element of `windows`.
double reconstruction_loss(const ParamSet& params, const WindowSet& windows, const AutoencoderSpec& spec = {});

struct LocalResult {
    ParamSet params;
    std::optional<double> test_loss;  // empty when the shard has no test windows
};

/// local_epochs of minibatch SGD on the reconstruction loss over the shard's
/// unlabeled windows, reshuffled each epoch from `round_seed`. Stateless:
/// optimizer state starts fresh on every call.
LocalResult local_train(const ParamSet& params, const ClientShard& shard, const FedConfig& cfg,
                        std::uint64_t round_seed, const AutoencoderSpec& spec = {});

/// Seed for one client's local training in one round.
std::uint64_t client_round_seed(std::uint64_t global_seed, int round, const std::string& client_id);

struct PretrainResult {
    ParamSet params;
    std::vector<RoundRecord> rounds;
    std::vector<std::string> warnings;
};

using RoundObserver = std::function<void(const RoundRecord&)>;

PretrainResult run_federated_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                         const ParamSet& initial, const AutoencoderSpec& spec = {},
                                         const RoundObserver& observer = {});
/// Same, starting from build_autoencoder(spec, seed derived from cfg.seed).
PretrainResult run_federated_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                         const AutoencoderSpec& spec = {}, const RoundObserver& observer = {});

/// Trains the autoencoder at the server on the union of every client's
/// unlabeled windows for rounds * local_epochs passes. One record per
/// local_epochs passes, with zero communication.
PretrainResult run_centralized_pretraining(const FederationLayout& layout, const FedConfig& cfg,
                                           const ParamSet& initial, const AutoencoderSpec& spec = {},
                                           const RoundObserver& observer = {});

/// w_c = n / (k * n_c) over the k classes present; absent classes get 0.
std::array<double, kNumClasses> balanced_class_weights(std::span<const int> labels);

struct FineTuneResult {
    ParamSet classifier;
    std::vector<double> epoch_losses;
    std::array<double, kNumClasses> class_weights{};
};

/// Builds a classifier from the encoder and trains it with Adam on the
/// class-weighted cross-entropy.
FineTuneResult fine_tune(const ParamSet& encoder_params, const WindowSet& server_labeled, const FineTuneConfig& cfg,
                         const AutoencoderSpec& spec = {});

/// Training loop shared by every arm, starting from an existing classifier.
FineTuneResult fine_tune_classifier(ParamSet classifier, const WindowSet& server_labeled, const FineTuneConfig& cfg,
                                    const AutoencoderSpec& spec = {});

enum class BaselineMode { Conventional, ConventionalPlusAe };

struct BaselineResult {
    FineTuneResult fine_tune;
    std::optional<PretrainResult> pretraining;  // ConventionalPlusAe only
};

/// Conventional: classifier from random initialization, encoder trainable,
/// trained on the server's labeled pool only. ConventionalPlusAe: centralized
/// autoencoder pretraining, then the same fine_tune as the federated arm.
BaselineResult run_centralized_baseline(const FederationLayout& layout, BaselineMode mode, const FedConfig& fed,
                                        const FineTuneConfig& ft, const AutoencoderSpec& spec = {},
                                        const RoundObserver& observer = {});

/// Initial autoencoder shared by the federated and centralized arms.
ParamSet initial_autoencoder(const FedConfig& cfg, const AutoencoderSpec& spec);

/// Runs fn(0..n-1) on up to `workers` threads. Exceptions are rethrown in
/// index order after all tasks finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace fedae
