#include "fedae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"

namespace fedae {

std::size_t conv1d_output_length(std::size_t len, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (kernel < 1 || stride < 1) throw ShapeError("conv1d: kernel and stride must be >= 1");
    if (len + 2 * padding < kernel) {
        throw ShapeError("conv1d: padded length " + std::to_string(len + 2 * padding) + " is shorter than kernel " +
                         std::to_string(kernel));
    }
    return (len + 2 * padding - kernel) / stride + 1;
}

std::size_t conv1d_transposed_output_length(std::size_t len, std::size_t kernel, std::size_t stride,
                                            std::size_t padding, std::size_t output_padding) {
    if (kernel < 1 || stride < 1) throw ShapeError("conv1d_transposed: kernel and stride must be >= 1");
    if (output_padding >= stride) {
        throw ShapeError("conv1d_transposed: output_padding " + std::to_string(output_padding) +
                         " must be smaller than stride " + std::to_string(stride));
    }
    const std::size_t full = (len - 1) * stride + kernel + output_padding;
    if (full <= 2 * padding) throw ShapeError("conv1d_transposed: padding consumes the whole output");
    return full - 2 * padding;
}

namespace ops {
namespace {

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, const char* op) {
    if (a.tape != b.tape || a.tape == nullptr) throw ShapeError(std::string(op) + ": operands live on different tapes");
}

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
    }
}

}  // namespace

template <typename T>
Var<T> conv1d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding) {
    require_same_tape(input, weight, "conv1d");
    require_same_tape(input, bias, "conv1d");
    const auto& x = input.value();
    const auto& w = weight.value();
    const auto& b = bias.value();
    require_rank(x, 3, "conv1d", "input");
    require_rank(w, 3, "conv1d", "weight");
    require_rank(b, 1, "conv1d", "bias");
    const std::size_t batch = x.dim(0), ch_in = x.dim(1), len = x.dim(2);
    const std::size_t ch_out = w.dim(0), kernel = w.dim(2);
    if (w.dim(1) != ch_in) {
        throw ShapeError("conv1d: input " + shape_string(x.shape()) + " has " + std::to_string(ch_in) +
                         " channels but weight " + shape_string(w.shape()) + " expects " + std::to_string(w.dim(1)));
    }
    if (b.dim(0) != ch_out) throw ShapeError("conv1d: bias " + shape_string(b.shape()) + " does not match ch_out");
    const std::size_t len_out = conv1d_output_length(len, kernel, stride, padding);

    const kernels::ConvGeometry geom{ch_in, len, len_out, kernel, stride, padding};
    const std::size_t rows = ch_in * kernel, width = batch * len_out;
    std::vector<T> col(rows * width);
    kernels::im2col(geom, batch, x.data(), col.data());

    std::vector<T> ym(ch_out * width, T{0});
    for (std::size_t co = 0; co < ch_out; ++co) std::fill_n(ym.data() + co * width, width, b[co]);
    kernels::matmul_acc(ch_out, width, rows, w.data(), col.data(), ym.data());
    BasicTensor<T> out(Shape{batch, ch_out, len_out});
    kernels::channel_major_to_batch(batch, ch_out, len_out, ym.data(), out.data());

    const bool needs = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    const std::size_t xi = input.id, wi = weight.id, bi = bias.id;
    return input.tape->record(
        std::move(out), needs,
        [=, col = std::move(col)](Tape<T>& tape, std::size_t self) {
            const auto gy = tape.tensor(self).grad();
            std::vector<T> gym(ch_out * width);
            kernels::batch_to_channel_major(batch, ch_out, len_out, gy.data(), gym.data());
            if (auto gb = tape.grad_sink(bi); !gb.empty()) {
                for (std::size_t co = 0; co < ch_out; ++co) {
                    const T* row = gym.data() + co * width;
                    T acc{0};
                    for (std::size_t i = 0; i < width; ++i) acc += row[i];
                    gb[co] += acc;
                }
            }
            if (auto gw = tape.grad_sink(wi); !gw.empty()) {
                std::vector<T> col_t(width * rows);
                kernels::transpose(rows, width, col.data(), col_t.data());
                kernels::matmul_acc(ch_out, rows, width, gym.data(), col_t.data(), gw.data());
            }
            if (auto gx = tape.grad_sink(xi); !gx.empty()) {
                const auto& wv = tape.tensor(wi);
                std::vector<T> gcol(rows * width, T{0});
                kernels::matmul_tn_acc(rows, width, ch_out, wv.data(), gym.data(), gcol.data());
                kernels::col2im(geom, batch, gcol.data(), gx.data());
            }
        });
}

template <typename T>
Var<T> conv1d_transposed(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t padding,
                         std::size_t output_padding) {
    require_same_tape(input, weight, "conv1d_transposed");
    require_same_tape(input, bias, "conv1d_transposed");
    const auto& x = input.value();
    const auto& w = weight.value();
    const auto& b = bias.value();
    require_rank(x, 3, "conv1d_transposed", "input");
    require_rank(w, 3, "conv1d_transposed", "weight");
    require_rank(b, 1, "conv1d_transposed", "bias");
    const std::size_t batch = x.dim(0), ch_in = x.dim(1), len = x.dim(2);
    const std::size_t ch_out = w.dim(1), kernel = w.dim(2);
    if (w.dim(0) != ch_in) {
        throw ShapeError("conv1d_transposed: input " + shape_string(x.shape()) + " has " + std::to_string(ch_in) +
                         " channels but weight " + shape_string(w.shape()) + " expects " + std::to_string(w.dim(0)));
    }
    if (b.dim(0) != ch_out) {
        throw ShapeError("conv1d_transposed: bias " + shape_string(b.shape()) + " does not match ch_out");
    }
    const std::size_t len_out = conv1d_transposed_output_length(len, kernel, stride, padding, output_padding);

    // The transposed layer is the adjoint of a convolution from len_out down to len.
    const kernels::ConvGeometry geom{ch_out, len_out, len, kernel, stride, padding};
    const std::size_t rows = ch_out * kernel, width = batch * len;
    std::vector<T> xm(ch_in * width);
    kernels::batch_to_channel_major(batch, ch_in, len, x.data(), xm.data());
    std::vector<T> col(rows * width, T{0});
    kernels::matmul_tn_acc(rows, width, ch_in, w.data(), xm.data(), col.data());

    BasicTensor<T> out(Shape{batch, ch_out, len_out});
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t co = 0; co < ch_out; ++co) std::fill_n(out.data() + (n * ch_out + co) * len_out, len_out, b[co]);
    }
    kernels::col2im(geom, batch, col.data(), out.data());

    const bool needs = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    const std::size_t xi = input.id, wi = weight.id, bi = bias.id;
    return input.tape->record(
        std::move(out), needs,
        [=, xm = std::move(xm)](Tape<T>& tape, std::size_t self) {
            const auto gy = tape.tensor(self).grad();
            if (auto gb = tape.grad_sink(bi); !gb.empty()) {
                for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t co = 0; co < ch_out; ++co) {
                        const T* row = gy.data() + (n * ch_out + co) * len_out;
                        T acc{0};
                        for (std::size_t i = 0; i < len_out; ++i) acc += row[i];
                        gb[co] += acc;
                    }
                }
            }
            auto gw = tape.grad_sink(wi);
            auto gx = tape.grad_sink(xi);
            if (gw.empty() && gx.empty()) return;
            std::vector<T> gcol(rows * width);
            kernels::im2col(geom, batch, gy.data(), gcol.data());
            if (!gw.empty()) {
                std::vector<T> gcol_t(width * rows);
                kernels::transpose(rows, width, gcol.data(), gcol_t.data());
                kernels::matmul_acc(ch_in, rows, width, xm.data(), gcol_t.data(), gw.data());
            }
            if (!gx.empty()) {
                const auto& wv = tape.tensor(wi);
                std::vector<T> gxm(ch_in * width, T{0});
                kernels::matmul_acc(ch_in, width, rows, wv.data(), gcol.data(), gxm.data());
                std::vector<T> gxb(gx.size());
                kernels::channel_major_to_batch(batch, ch_in, len, gxm.data(), gxb.data());
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gxb[i];
            }
        });
}

template <typename T>
Var<T> linear(Var<T> input, Var<T> weight, Var<T> bias) {
    require_same_tape(input, weight, "linear");
    require_same_tape(input, bias, "linear");
    const auto& x = input.value();
    const auto& w = weight.value();
    const auto& b = bias.value();
    require_rank(x, 2, "linear", "input");
    require_rank(w, 2, "linear", "weight");
    require_rank(b, 1, "linear", "bias");
    const std::size_t batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
    if (w.dim(1) != in) {
        throw ShapeError("linear: input " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(w.shape()));
    }
    if (b.dim(0) != out_dim) throw ShapeError("linear: bias " + shape_string(b.shape()) + " does not match weight");

    std::vector<T> w_t(in * out_dim);
    kernels::transpose(out_dim, in, w.data(), w_t.data());
    BasicTensor<T> out(Shape{batch, out_dim});
    for (std::size_t n = 0; n < batch; ++n) std::copy_n(b.data(), out_dim, out.data() + n * out_dim);
    kernels::matmul_acc(batch, out_dim, in, x.data(), w_t.data(), out.data());

    const bool needs = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    const std::size_t xi = input.id, wi = weight.id, bi = bias.id;
    return input.tape->record(std::move(out), needs, [=](Tape<T>& tape, std::size_t self) {
        const auto gy = tape.tensor(self).grad();
        if (auto gb = tape.grad_sink(bi); !gb.empty()) {
            for (std::size_t n = 0; n < batch; ++n) kernels::axpy(out_dim, T{1}, gy.data() + n * out_dim, gb.data());
        }
        if (auto gw = tape.grad_sink(wi); !gw.empty()) {
            kernels::matmul_tn_acc(out_dim, in, batch, gy.data(), tape.tensor(xi).data(), gw.data());
        }
        if (auto gx = tape.grad_sink(xi); !gx.empty()) {
            kernels::matmul_acc(batch, in, out_dim, gy.data(), tape.tensor(wi).data(), gx.data());
        }
    });
}

template <typename T>
Var<T> relu(Var<T> input) {
    const auto& x = input.value();
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
    const std::size_t xi = input.id;
    return input.tape->record(std::move(out), input.requires_grad(), [=](Tape<T>& tape, std::size_t self) {
        const auto& y = tape.tensor(self);
        const auto gy = y.grad();
        auto gx = tape.grad_sink(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (y[i] > T{0}) gx[i] += gy[i];
        }
    });
}

template <typename T>
Var<T> reshape(Var<T> input, Shape shape) {
    const auto& x = input.value();
    if (shape_size(shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    const std::size_t xi = input.id;
    return input.tape->record(x.reshaped(std::move(shape)), input.requires_grad(),
                              [=](Tape<T>& tape, std::size_t self) {
                                  const auto gy = tape.tensor(self).grad();
                                  auto gx = tape.grad_sink(xi);
                                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
                              });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    require_same_tape(a, b, "mul");
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.shape() != bv.shape()) {
        throw ShapeError("mul: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()) + " differ");
    }
    BasicTensor<T> out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(out), a.requires_grad() || b.requires_grad(),
                          [=](Tape<T>& tape, std::size_t self) {
                              const auto gy = tape.tensor(self).grad();
                              if (auto ga = tape.grad_sink(ai); !ga.empty()) {
                                  const auto& bt = tape.tensor(bi);
                                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bt[i];
                              }
                              if (auto gb = tape.grad_sink(bi); !gb.empty()) {
                                  const auto& at = tape.tensor(ai);
                                  for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * at[i];
                              }
                          });
}

template <typename T>
Var<T> sum(Var<T> input) {
    const auto& x = input.value();
    T acc{0};
    for (T v : x.values()) acc += v;
    const std::size_t xi = input.id;
    return input.tape->record(BasicTensor<T>::scalar(acc), input.requires_grad(),
                              [=](Tape<T>& tape, std::size_t self) {
                                  const T g = tape.tensor(self).grad()[0];
                                  for (T& v : tape.grad_sink(xi)) v += g;
                              });
}

template <typename T>
Var<T> mse_loss(Var<T> pred, Var<T> target) {
    require_same_tape(pred, target, "mse_loss");
    const auto& p = pred.value();
    const auto& t = target.value();
    if (p.shape() != t.shape()) {
        throw ShapeError("mse_loss: prediction " + shape_string(p.shape()) + " and target " +
                         shape_string(t.shape()) + " differ");
    }
    // Accumulate in double so the float loss does not depend on summation drift.
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
        acc += d * d;
    }
    const std::size_t n = p.size();
    const std::size_t pi = pred.id, ti = target.id;
    return pred.tape->record(BasicTensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))),
                             pred.requires_grad() || target.requires_grad(), [=](Tape<T>& tape, std::size_t self) {
                                 const T scale = tape.tensor(self).grad()[0] * T{2} / static_cast<T>(n);
                                 const auto& pv = tape.tensor(pi);
                                 const auto& tv = tape.tensor(ti);
                                 if (auto gp = tape.grad_sink(pi); !gp.empty()) {
                                     for (std::size_t i = 0; i < n; ++i) gp[i] += scale * (pv[i] - tv[i]);
                                 }
                                 if (auto gt = tape.grad_sink(ti); !gt.empty()) {
                                     for (std::size_t i = 0; i < n; ++i) gt[i] -= scale * (pv[i] - tv[i]);
                                 }
                             });
}

template <typename T>
Var<T> weighted_softmax_cross_entropy(Var<T> logits, std::span<const int> labels, std::span<const T> class_weights) {
    const auto& z = logits.value();
    require_rank(z, 2, "weighted_softmax_cross_entropy", "logits");
    const std::size_t batch = z.dim(0), classes = z.dim(1);
    if (labels.size() != batch) {
        throw ShapeError("weighted_softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
    }
    if (class_weights.size() != classes) {
        throw ShapeError("weighted_softmax_cross_entropy: " + std::to_string(class_weights.size()) +
                         " class weights for " + std::to_string(classes) + " classes");
    }
    for (T w : class_weights) {
        if (!(w >= T{0}) || !std::isfinite(static_cast<double>(w))) {
            throw ShapeError("weighted_softmax_cross_entropy: class weights must be finite and non-negative");
        }
    }
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw ShapeError("weighted_softmax_cross_entropy: label " + std::to_string(label) + " outside [0," +
                             std::to_string(classes) + ")");
        }
    }

    std::vector<T> probs(batch * classes);
    double total = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
        const T* row = z.data() + n * classes;
        const T peak = *std::max_element(row, row + classes);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(row[c] - peak));
        const double log_denom = std::log(denom);
        for (std::size_t c = 0; c < classes; ++c) {
            probs[n * classes + c] = static_cast<T>(std::exp(static_cast<double>(row[c] - peak) - log_denom));
        }
        const auto y = static_cast<std::size_t>(labels[n]);
        const double nll = log_denom - static_cast<double>(row[y] - peak);
        total += static_cast<double>(class_weights[y]) * nll;
    }
    std::vector<int> label_copy(labels.begin(), labels.end());
    std::vector<T> weight_copy(class_weights.begin(), class_weights.end());
    const std::size_t zi = logits.id;
    return logits.tape->record(
        BasicTensor<T>::scalar(static_cast<T>(total / static_cast<double>(batch))), logits.requires_grad(),
        [=, probs = std::move(probs), label_copy = std::move(label_copy),
         weight_copy = std::move(weight_copy)](Tape<T>& tape, std::size_t self) {
            const T g = tape.tensor(self).grad()[0] / static_cast<T>(batch);
            auto gz = tape.grad_sink(zi);
            for (std::size_t n = 0; n < batch; ++n) {
                const auto y = static_cast<std::size_t>(label_copy[n]);
                const T scale = g * weight_copy[y];
                for (std::size_t c = 0; c < classes; ++c) {
                    const T onehot = c == y ? T{1} : T{0};
                    gz[n * classes + c] += scale * (probs[n * classes + c] - onehot);
                }
            }
        });
}

#define FEDAE_INSTANTIATE_OPS(T)                                                                                  \
    template Var<T> conv1d<T>(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);                                  \
    template Var<T> conv1d_transposed<T>(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t, std::size_t);         \
    template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                                            \
    template Var<T> relu<T>(Var<T>);                                                                              \
    template Var<T> reshape<T>(Var<T>, Shape);                                                                    \
    template Var<T> mul<T>(Var<T>, Var<T>);                                                                       \
    template Var<T> sum<T>(Var<T>);                                                                               \
    template Var<T> mse_loss<T>(Var<T>, Var<T>);                                                                  \
    template Var<T> weighted_softmax_cross_entropy<T>(Var<T>, std::span<const int>, std::span<const T>);

FEDAE_INSTANTIATE_OPS(float)
FEDAE_INSTANTIATE_OPS(double)

#undef FEDAE_INSTANTIATE_OPS

}  // namespace ops
}  // namespace fedae
