#include "fedae/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedae/random.hpp"

namespace fedae {
namespace {

std::string conv_name(std::size_t i) { return "encoder.conv" + std::to_string(i); }
std::string deconv_name(std::size_t i) { return "decoder.deconv" + std::to_string(i); }

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); bias starts at zero.
void add_layer(ParamSet& params, const std::string& prefix, Shape weight_shape, std::size_t fan_in,
               std::size_t fan_out, std::size_t bias_size, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0, prefix));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor weight(std::move(weight_shape));
    for (float& v : weight.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    weight.set_requires_grad(true);
    Tensor bias(Shape{bias_size});
    bias.set_requires_grad(true);
    params.add(prefix + ".weight", std::move(weight));
    params.add(prefix + ".bias", std::move(bias));
}

void add_head(ParamSet& params, std::size_t latent_dim, const ClassifierSpec& head, std::uint64_t seed) {
    add_layer(params, "head.hidden", Shape{head.hidden_dim, latent_dim}, latent_dim, head.hidden_dim,
              head.hidden_dim, seed);
    add_layer(params, "head.output", Shape{head.n_classes, head.hidden_dim}, head.hidden_dim, head.n_classes,
              head.n_classes, seed);
}

void expect_shape(const ParamSet& params, const std::string& name, const Shape& shape) {
    const Tensor* t = params.find(name);
    if (!t) throw ShapeError("model parameters are missing '" + name + "'");
    if (t->shape() != shape) {
        throw ShapeError("parameter '" + name + "' has shape " + shape_string(t->shape()) + ", expected " +
                         shape_string(shape));
    }
}

Var<float> dense(const ParamBinding& p, const std::string& prefix, Var<float> x) {
    return ops::linear(x, p[prefix + ".weight"], p[prefix + ".bias"]);
}

}  // namespace

void AutoencoderSpec::validate() const {
    if (in_channels == 0 || window_len == 0 || conv_filters == 0 || kernel == 0 || stride == 0 || latent_dim == 0 ||
        n_conv_layers == 0) {
        throw ConfigError("model: all sizes must be positive");
    }
    if (output_padding >= stride) throw ConfigError("model: output_padding must be smaller than stride");
    std::size_t len = window_len;
    for (std::size_t i = 0; i < n_conv_layers; ++i) {
        if (len + 2 * padding < kernel) throw ConfigError("model: encoder length collapses below the kernel size");
        const std::size_t next = (len + 2 * padding - kernel) / stride + 1;
        const std::size_t restored = (next - 1) * stride + kernel + output_padding;
        if (restored < 2 * padding || restored - 2 * padding != len) {
            throw ConfigError("model: decoder layer " + std::to_string(i) + " cannot restore length " +
                              std::to_string(len) + " from " + std::to_string(next));
        }
        len = next;
    }
}

std::vector<std::size_t> AutoencoderSpec::encoder_lengths() const {
    std::vector<std::size_t> lengths;
    std::size_t len = window_len;
    for (std::size_t i = 0; i < n_conv_layers; ++i) {
        len = conv1d_output_length(len, kernel, stride, padding);
        lengths.push_back(len);
    }
    return lengths;
}

std::size_t AutoencoderSpec::flattened_size() const { return conv_filters * encoder_lengths().back(); }

bool is_encoder_param(std::string_view name) { return name.starts_with(kEncoderPrefix); }

ParamSet build_autoencoder(const AutoencoderSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamSet params;
    const std::size_t f = spec.conv_filters, k = spec.kernel;
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        const std::size_t in = i == 0 ? spec.in_channels : f;
        add_layer(params, conv_name(i), Shape{f, in, k}, in * k, f * k, f, seed);
    }
    const std::size_t flat = spec.flattened_size();
    add_layer(params, "encoder.latent", Shape{spec.latent_dim, flat}, flat, spec.latent_dim, spec.latent_dim, seed);
    add_layer(params, "decoder.expand", Shape{flat, spec.latent_dim}, spec.latent_dim, flat, flat, seed);
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        const bool last = i + 1 == spec.n_conv_layers;
        const std::size_t out = last ? spec.in_channels : f;
        add_layer(params, deconv_name(i), Shape{f, out, k}, out * k, f * k, out, seed);
    }
    return params;
}

ParamSet build_classifier_from_encoder(const ParamSet& ae_params, std::uint64_t seed, const AutoencoderSpec& spec,
                                       const ClassifierSpec& head) {
    check_encoder_params(ae_params, spec);
    ParamSet params;
    for (const auto& e : ae_params.entries()) {
        if (is_encoder_param(e.name)) {
            Tensor copy = e.tensor;
            copy.clear_grad();
            copy.set_requires_grad(true);
            params.add(e.name, std::move(copy));
        }
    }
    add_head(params, spec.latent_dim, head, seed);
    return params;
}

void check_batch_shape(const Tensor& batch, const AutoencoderSpec& spec) {
    if (batch.rank() != 3 || batch.dim(1) != spec.in_channels || batch.dim(2) != spec.window_len) {
        throw ShapeError("model input must be [batch," + std::to_string(spec.in_channels) + "," +
                         std::to_string(spec.window_len) + "], got " + shape_string(batch.shape()));
    }
}

void check_encoder_params(const ParamSet& params, const AutoencoderSpec& spec) {
    const std::size_t f = spec.conv_filters, k = spec.kernel;
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        expect_shape(params, conv_name(i) + ".weight", Shape{f, i == 0 ? spec.in_channels : f, k});
        expect_shape(params, conv_name(i) + ".bias", Shape{f});
    }
    expect_shape(params, "encoder.latent.weight", Shape{spec.latent_dim, spec.flattened_size()});
    expect_shape(params, "encoder.latent.bias", Shape{spec.latent_dim});
}

void check_autoencoder_params(const ParamSet& params, const AutoencoderSpec& spec) {
    check_encoder_params(params, spec);
    const std::size_t flat = spec.flattened_size();
    expect_shape(params, "decoder.expand.weight", Shape{flat, spec.latent_dim});
    expect_shape(params, "decoder.expand.bias", Shape{flat});
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        const std::size_t out = i + 1 == spec.n_conv_layers ? spec.in_channels : spec.conv_filters;
        expect_shape(params, deconv_name(i) + ".weight", Shape{spec.conv_filters, out, spec.kernel});
        expect_shape(params, deconv_name(i) + ".bias", Shape{out});
    }
}

void check_classifier_params(const ParamSet& params, const AutoencoderSpec& spec) {
    check_encoder_params(params, spec);
    const Tensor& hidden = params.at("head.hidden.weight");
    const Tensor& output = params.at("head.output.weight");
    if (hidden.rank() != 2 || hidden.dim(1) != spec.latent_dim || output.rank() != 2 ||
        output.dim(1) != hidden.dim(0)) {
        throw ShapeError("classifier head does not match the latent size");
    }
}

namespace graph {

Var<float> encoder(const ParamBinding& p, Var<float> x, const AutoencoderSpec& spec) {
    Var<float> h = x;
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        const std::string name = conv_name(i);
        h = ops::relu(ops::conv1d(h, p[name + ".weight"], p[name + ".bias"], spec.stride, spec.padding));
    }
    const std::size_t batch = h.shape()[0];
    h = ops::reshape(h, Shape{batch, spec.flattened_size()});
    return dense(p, "encoder.latent", h);
}

Var<float> decoder(const ParamBinding& p, Var<float> latent, const AutoencoderSpec& spec) {
    const std::size_t batch = latent.shape()[0];
    Var<float> h = ops::relu(dense(p, "decoder.expand", latent));
    h = ops::reshape(h, Shape{batch, spec.conv_filters, spec.encoder_lengths().back()});
    for (std::size_t i = 0; i < spec.n_conv_layers; ++i) {
        const std::string name = deconv_name(i);
        h = ops::conv1d_transposed(h, p[name + ".weight"], p[name + ".bias"], spec.stride, spec.padding,
                                   spec.output_padding);
        if (i + 1 < spec.n_conv_layers) h = ops::relu(h);
    }
    return h;
}

Var<float> classifier_head(const ParamBinding& p, Var<float> latent) {
    return dense(p, "head.output", ops::relu(dense(p, "head.hidden", latent)));
}

}  // namespace graph

AeOutput ae_forward(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec) {
    check_batch_shape(batch, spec);
    check_autoencoder_params(params, spec);
    ParamSet frozen = params;
    frozen.set_requires_grad(false);
    Tape<float> tape;
    ParamBinding p(tape, frozen);
    const Var<float> latent = graph::encoder(p, tape.constant(batch), spec);
    const Var<float> recon = graph::decoder(p, latent, spec);
    return AeOutput{recon.value(), latent.value()};
}

Tensor encode(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec) {
    check_batch_shape(batch, spec);
    check_encoder_params(params, spec);
    Tape<float> tape;
    ParamSet frozen;
    for (const auto& e : params.entries()) {
        if (!is_encoder_param(e.name)) continue;
        Tensor t = e.tensor;
        t.set_requires_grad(false);
        frozen.add(e.name, std::move(t));
    }
    ParamBinding p(tape, frozen);
    Tensor latent = graph::encoder(p, tape.constant(batch), spec).value();
    latent.clear_grad();
    return latent;
}

Tensor classifier_head_forward(const ParamSet& params, const Tensor& latent) {
    ParamSet head;
    for (const auto& e : params.entries()) {
        if (!e.name.starts_with("head.")) continue;
        Tensor t = e.tensor;
        t.set_requires_grad(false);
        head.add(e.name, std::move(t));
    }
    Tape<float> tape;
    ParamBinding p(tape, head);
    return graph::classifier_head(p, tape.constant(latent)).value();
}

Tensor classifier_forward(const ParamSet& params, const Tensor& batch, const AutoencoderSpec& spec) {
    check_classifier_params(params, spec);
    return classifier_head_forward(params, encode(params, batch, spec));
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) throw ShapeError("softmax_rows: expected [batch, classes]");
    const std::size_t rows = logits.dim(0), cols = logits.dim(1);
    Tensor out(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const float* z = logits.data() + r * cols;
        const float peak = *std::max_element(z, z + cols);
        double denom = 0.0;
        for (std::size_t c = 0; c < cols; ++c) denom += std::exp(static_cast<double>(z[c] - peak));
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = static_cast<float>(std::exp(static_cast<double>(z[c] - peak)) / denom);
        }
    }
    return out;
}

}  // namespace fedae
