#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedae/autodiff.hpp"
#include "fedae/optim.hpp"
#include "fedae/param_set.hpp"

namespace fedae {

inline constexpr std::size_t kNumClasses = 13;

/// Convolutional autoencoder geometry. The defaults give an encoder chain
/// 128 -> 64 -> 32 -> 16 -> 8 with 32 filters and a 128-unit dense latent.
struct AutoencoderSpec {
    std::size_t in_channels = 6;
    std::size_t window_len = 128;
    std::size_t conv_filters = 32;
    std::size_t kernel = 5;
    std::size_t stride = 2;
    std::size_t padding = 2;
    std::size_t output_padding = 1;
    std::size_t latent_dim = 128;
    std::size_t n_conv_layers = 4;

    /// Throws ConfigError unless the decoder exactly inverts the encoder lengths.
    void validate() const;

    /// Output length after each encoder convolution.
    std::vector<std::size_t> encoder_lengths() const;
    std::size_t flattened_size() const;

    friend bool operator==(const AutoencoderSpec&, const AutoencoderSpec&) = default;
};

struct ClassifierSpec {
    std::size_t hidden_dim = 32;
    std::size_t n_classes = kNumClasses;
};

/// Parameter-name prefix shared by every encoder entry.
inline constexpr std::string_view kEncoderPrefix = "encoder.";

ParamSet build_autoencoder(const AutoencoderSpec& spec, std::uint64_t seed);

/// Copies the encoder of `ae_params` and attaches a freshly initialized
/// dense(hidden) -> dense(n_classes) head.
ParamSet build_classifier_from_encoder(const ParamSet& ae_params, std::uint64_t seed,
                                       const AutoencoderSpec& spec = {}, const ClassifierSpec& head = {});

bool is_encoder_param(std::string_view name);

struct AeOutput {
    Tensor reconstruction;
    Tensor latent;
};

AeOutput ae_forward(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec = {});
/// Latent codes [b, latent_dim]; accepts autoencoder or classifier params.
Tensor encode(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec = {});
/// Logits [b, n_classes]; softmax is left to the loss.
Tensor classifier_forward(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec = {});
/// Logits from precomputed latent codes.
Tensor classifier_head_forward(const ParamSet& params, const Tensor& latent);

/// Row-wise softmax of [b, classes] logits.
Tensor softmax_rows(const Tensor& logits);

namespace graph {

Var<float> encoder(const ParamBinding& p, Var<float> x, const AutoencoderSpec& spec);
Var<float> decoder(const ParamBinding& p, Var<float> latent, const AutoencoderSpec& spec);
Var<float> classifier_head(const ParamBinding& p, Var<float> latent);

}  // namespace graph

void check_batch_shape(const Tensor& batch, const AutoencoderSpec& spec);
void check_autoencoder_params(const ParamSet& params, const AutoencoderSpec& spec);
void check_encoder_params(const ParamSet& params, const AutoencoderSpec& spec);
void check_classifier_params(const ParamSet& params, const AutoencoderSpec& spec);

}  // namespace fedae
