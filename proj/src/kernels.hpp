#pragma once

// Dense kernels shared by the layer ops. All products are written in axpy
// form (contiguous inner loop, no reductions) so they vectorize without
// reassociating floating-point sums.

#include <cstddef>

namespace fedae::kernels {

template <typename T>
inline void axpy(std::size_t n, T alpha, const T* __restrict x, T* __restrict y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void matmul_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
    for (std::size_t i = 0; i < m; ++i) {
        T* row = c + i * n;
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) axpy(n, arow[p], b + p * n, row);
    }
}

/// C[m,n] += A^T * B with A stored [k,m] and B stored [k,n].
template <typename T>
void matmul_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) axpy(n, arow[i], brow, c + i * n);
    }
}

/// out[cols, rows] = in[rows, cols]^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
    }
}

/// Index map of a strided, zero-padded 1D convolution from a signal of
/// `signal_len` to `out_len` positions: output o reads signal o*stride+k-padding.
struct ConvGeometry {
    std::size_t channels;
    std::size_t signal_len;
    std::size_t out_len;
    std::size_t kernel;
    std::size_t stride;
    std::size_t padding;

    /// Half-open range of o for which o*stride + k - padding lies in the signal.
    void valid_range(std::size_t k, std::size_t& lo, std::size_t& hi) const {
        // lo = ceil((padding - k) / stride) clamped at 0
        lo = k >= padding ? 0 : (padding - k + stride - 1) / stride;
        // hi = floor((signal_len - 1 + padding - k) / stride) + 1, clamped to out_len
        const std::size_t top = signal_len - 1 + padding;
        hi = top < k ? 0 : (top - k) / stride + 1;
        if (hi > out_len) hi = out_len;
        if (lo > hi) lo = hi;
    }
};

/// signal [batch, channels, signal_len] -> col [channels*kernel, batch*out_len]
template <typename T>
void im2col(const ConvGeometry& g, std::size_t batch, const T* signal, T* col) {
    const std::size_t width = batch * g.out_len;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t k = 0; k < g.kernel; ++k) {
            T* row = col + (c * g.kernel + k) * width;
            std::size_t lo, hi;
            g.valid_range(k, lo, hi);
            for (std::size_t b = 0; b < batch; ++b) {
                const T* src = signal + (b * g.channels + c) * g.signal_len;
                T* dst = row + b * g.out_len;
                for (std::size_t o = 0; o < lo; ++o) dst[o] = T{0};
                for (std::size_t o = lo; o < hi; ++o) dst[o] = src[o * g.stride + k - g.padding];
                for (std::size_t o = hi; o < g.out_len; ++o) dst[o] = T{0};
            }
        }
    }
}

/// Adjoint of im2col: scatter-adds col back into signal.
template <typename T>
void col2im(const ConvGeometry& g, std::size_t batch, const T* col, T* signal) {
    const std::size_t width = batch * g.out_len;
    for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t k = 0; k < g.kernel; ++k) {
            const T* row = col + (c * g.kernel + k) * width;
            std::size_t lo, hi;
            g.valid_range(k, lo, hi);
            for (std::size_t b = 0; b < batch; ++b) {
                T* dst = signal + (b * g.channels + c) * g.signal_len;
                const T* src = row + b * g.out_len;
                for (std::size_t o = lo; o < hi; ++o) dst[o * g.stride + k - g.padding] += src[o];
            }
        }
    }
}

/// [batch, channels, len] <-> [channels, batch*len]
template <typename T>
void batch_to_channel_major(std::size_t batch, std::size_t channels, std::size_t len, const T* in, T* out) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T* src = in + (b * channels + c) * len;
            T* dst = out + c * batch * len + b * len;
            for (std::size_t i = 0; i < len; ++i) dst[i] = src[i];
        }
    }
}

template <typename T>
void channel_major_to_batch(std::size_t batch, std::size_t channels, std::size_t len, const T* in, T* out) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T* src = in + c * batch * len + b * len;
            T* dst = out + (b * channels + c) * len;
            for (std::size_t i = 0; i < len; ++i) dst[i] = src[i];
        }
    }
}

}  // namespace fedae::kernels
