#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "leafnet/common.hpp"
#include "leafnet/tensor.hpp"

// Layer math.  Every kernel is a pure function of its inputs; forward passes
// return whatever the matching backward needs (saved input, argmax indices,
// dropout mask) instead of hiding state.  All kernels are deterministic:
// each output element is accumulated in a fixed order by exactly one thread,
// so results are bit-identical for any thread count.

namespace leafnet {
namespace nn {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// ---------------------------------------------------------------------------
// GEMM primitives (row-major, tightly packed, accumulate into C)
// ---------------------------------------------------------------------------

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_nn(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel && M > 1)
    for (int64_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        const T* a = A + i * K;
        for (int64_t k = 0; k < K; ++k) {
            const T av = a[k];
            const T* b = B + k * N;
            for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void gemm_nt(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel && M > 1)
    for (int64_t i = 0; i < M; ++i) {
        const T* a = A + i * K;
        T* c = C + i * N;
        for (int64_t j = 0; j < N; ++j) {
            const T* b = B + j * K;
            T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            int64_t k = 0;
            for (; k + 4 <= K; k += 4) {
                s0 += a[k] * b[k];
                s1 += a[k + 1] * b[k + 1];
                s2 += a[k + 2] * b[k + 2];
                s3 += a[k + 3] * b[k + 3];
            }
            T s = ((s0 + s1) + (s2 + s3));
            for (; k < K; ++k) s += a[k] * b[k];
            c[j] += s;
        }
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_tn(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel && M > 1)
    for (int64_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        for (int64_t k = 0; k < K; ++k) {
            const T av = A[k * M + i];
            const T* b = B + k * N;
            for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// ---------------------------------------------------------------------------
// im2col / col2im for valid stride-1 convolution
// col has shape [C*kh*kw, OH*OW]
// ---------------------------------------------------------------------------

template <typename T>
void im2col(const T* x, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw, T* col) {
    const int64_t OH = H - kh + 1, OW = W - kw + 1;
    T* out = col;
    for (int64_t c = 0; c < C; ++c) {
        const T* plane = x + c * H * W;
        for (int64_t i = 0; i < kh; ++i)
            for (int64_t j = 0; j < kw; ++j)
                for (int64_t oy = 0; oy < OH; ++oy) {
                    const T* src = plane + (oy + i) * W + j;
                    for (int64_t ox = 0; ox < OW; ++ox) *out++ = src[ox];
                }
    }
}

template <typename T>
void col2im_add(const T* col, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw, T* x) {
    const int64_t OH = H - kh + 1, OW = W - kw + 1;
    const T* in = col;
    for (int64_t c = 0; c < C; ++c) {
        T* plane = x + c * H * W;
        for (int64_t i = 0; i < kh; ++i)
            for (int64_t j = 0; j < kw; ++j)
                for (int64_t oy = 0; oy < OH; ++oy) {
                    T* dst = plane + (oy + i) * W + j;
                    for (int64_t ox = 0; ox < OW; ++ox) dst[ox] += in[ox];
                    in += OW;
                }
    }
}

// ---------------------------------------------------------------------------
// Convolution: valid cross-correlation, stride 1
// ---------------------------------------------------------------------------

template <typename T>
void check_conv_shapes(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    if (x.rank() != 4 || w.rank() != 4)
        throw DimensionError("conv2d expects 4-d input and weights, got input " + x.shape_string() + " weights " +
                             w.shape_string());
    if (x.dim(1) != w.dim(1))
        throw DimensionError("conv2d channel mismatch: input axis 1 is " + std::to_string(x.dim(1)) +
                             ", weights axis 1 is " + std::to_string(w.dim(1)));
    if (w.dim(2) > x.dim(2) || w.dim(3) > x.dim(3))
        throw DimensionError("conv2d kernel " + std::to_string(w.dim(2)) + "x" + std::to_string(w.dim(3)) +
                             " exceeds input " + std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3)) +
                             " (axes 2,3)");
    if (b.rank() != 1 || b.dim(0) != w.dim(0))
        throw DimensionError("conv2d bias axis 0 must equal filter count " + std::to_string(w.dim(0)) + ", got " +
                             b.shape_string());
}

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    check_conv_shapes(x, w, b);
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int64_t OH = H - kh + 1, OW = W - kw + 1, OHW = OH * OW, CKK = C * kh * kw;

    TensorT<T> y({N, K, OH, OW});
    const bool outer = N >= max_threads();
#pragma omp parallel if (outer)
    {
        std::vector<T> col(size_t(CKK * OHW));
#pragma omp for schedule(static)
        for (int64_t n = 0; n < N; ++n) {
            im2col(x.data() + n * C * H * W, C, H, W, kh, kw, col.data());
            T* yn = y.data() + n * K * OHW;
            gemm_nn<T>(K, OHW, CKK, w.data(), col.data(), yn, !outer);
            for (int64_t k = 0; k < K; ++k) {
                const T bk = b[k];
                T* row = yn + k * OHW;
                for (int64_t p = 0; p < OHW; ++p) row[p] += bk;
            }
        }
    }
    return y;
}

template <typename T>
struct ConvGrads {
    TensorT<T> dx, dw, db;
};

template <typename T>
ConvGrads<T> conv2d_backward(const TensorT<T>& dy, const TensorT<T>& x, const TensorT<T>& w) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int64_t OH = H - kh + 1, OW = W - kw + 1, OHW = OH * OW, CKK = C * kh * kw;
    if (dy.rank() != 4 || dy.dim(0) != N || dy.dim(1) != K || dy.dim(2) != OH || dy.dim(3) != OW)
        throw DimensionError("conv2d_backward upstream shape " + dy.shape_string() + " does not match forward output [" +
                             std::to_string(N) + "," + std::to_string(K) + "," + std::to_string(OH) + "," +
                             std::to_string(OW) + "]");

    ConvGrads<T> g{TensorT<T>(x.shape()), TensorT<T>(w.shape()), TensorT<T>({K})};

    // dx: each image independent
    const bool outer = N >= max_threads();
#pragma omp parallel if (outer)
    {
        std::vector<T> dcol(size_t(CKK * OHW));
#pragma omp for schedule(static)
        for (int64_t n = 0; n < N; ++n) {
            std::fill(dcol.begin(), dcol.end(), T(0));
            gemm_tn<T>(CKK, OHW, K, w.data(), dy.data() + n * K * OHW, dcol.data(), !outer);
            col2im_add(dcol.data(), C, H, W, kh, kw, g.dx.data() + n * C * H * W);
        }
    }

    // dw, db: accumulate serially over images so the summation order does not
    // depend on the thread count; the gemm itself is still parallel.
    std::vector<T> col(size_t(CKK * OHW));
    for (int64_t n = 0; n < N; ++n) {
        im2col(x.data() + n * C * H * W, C, H, W, kh, kw, col.data());
        gemm_nt<T>(K, CKK, OHW, dy.data() + n * K * OHW, col.data(), g.dw.data());
        const T* dyn = dy.data() + n * K * OHW;
        for (int64_t k = 0; k < K; ++k) {
            T s = 0;
            for (int64_t p = 0; p < OHW; ++p) s += dyn[k * OHW + p];
            g.db[k] += s;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolOut {
    TensorT<T> y;
    std::vector<int64_t> argmax;  // flat index into the input, per output element
};

template <typename T>
MaxPoolOut<T> maxpool_forward(const TensorT<T>& x, int64_t k = 2, int64_t stride = 2) {
    if (x.rank() != 4) throw DimensionError("maxpool expects 4-d input, got " + x.shape_string());
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (k > H || k > W)
        throw DimensionError("maxpool window " + std::to_string(k) + " exceeds input " + std::to_string(H) + "x" +
                             std::to_string(W) + " (axes 2,3)");
    const int64_t OH = (H - k) / stride + 1, OW = (W - k) / stride + 1;

    MaxPoolOut<T> out{TensorT<T>({N, C, OH, OW}), std::vector<int64_t>(size_t(N * C * OH * OW))};
#pragma omp parallel for schedule(static) if (N * C > 1)
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* plane = x.data() + nc * H * W;
        T* yp = out.y.data() + nc * OH * OW;
        int64_t* am = out.argmax.data() + nc * OH * OW;
        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                int64_t best = (oy * stride) * W + ox * stride;
                T bv = plane[best];
                for (int64_t i = 0; i < k; ++i)
                    for (int64_t j = 0; j < k; ++j) {
                        const int64_t idx = (oy * stride + i) * W + ox * stride + j;
                        if (plane[idx] > bv) {  // strict: first occurrence wins ties
                            bv = plane[idx];
                            best = idx;
                        }
                    }
                yp[oy * OW + ox] = bv;
                am[oy * OW + ox] = nc * H * W + best;
            }
    }
    return out;
}

template <typename T>
TensorT<T> maxpool_backward(const TensorT<T>& dy, const std::vector<int64_t>& argmax,
                            const std::vector<int64_t>& input_shape) {
    if (size_t(dy.numel()) != argmax.size())
        throw StateError("maxpool_backward: argmax cache does not match upstream (" + std::to_string(argmax.size()) +
                         " vs " + std::to_string(dy.numel()) + " elements)");
    TensorT<T> dx(input_shape);
    for (int64_t i = 0; i < dy.numel(); ++i) dx[argmax[size_t(i)]] += dy[i];
    return dx;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
    TensorT<T> y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return y;
}

// gradient at exactly 0 is 0
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& dy, const TensorT<T>& x) {
    if (!dy.same_shape(x)) throw DimensionError("relu_backward shape mismatch " + dy.shape_string() + " vs " + x.shape_string());
    TensorT<T> dx(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
    return dx;
}

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> fc_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    if (x.rank() != 2 || w.rank() != 2)
        throw DimensionError("fc expects 2-d input and weights, got " + x.shape_string() + " and " + w.shape_string());
    if (x.dim(1) != w.dim(0))
        throw DimensionError("fc inner dimension mismatch: input axis 1 is " + std::to_string(x.dim(1)) +
                             ", weights axis 0 is " + std::to_string(w.dim(0)));
    if (b.rank() != 1 || b.dim(0) != w.dim(1))
        throw DimensionError("fc bias axis 0 must equal output width " + std::to_string(w.dim(1)) + ", got " +
                             b.shape_string());
    const int64_t N = x.dim(0), D = x.dim(1), M = w.dim(1);
    TensorT<T> y({N, M});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t m = 0; m < M; ++m) y.at2(n, m) = b[m];
    gemm_nn<T>(N, M, D, x.data(), w.data(), y.data());
    return y;
}

template <typename T>
struct FcGrads {
    TensorT<T> dx, dw, db;
};

template <typename T>
FcGrads<T> fc_backward(const TensorT<T>& dy, const TensorT<T>& x, const TensorT<T>& w) {
    const int64_t N = x.dim(0), D = x.dim(1), M = w.dim(1);
    if (dy.rank() != 2 || dy.dim(0) != N || dy.dim(1) != M)
        throw DimensionError("fc_backward upstream shape " + dy.shape_string() + " does not match output [" +
                             std::to_string(N) + "," + std::to_string(M) + "]");
    FcGrads<T> g{TensorT<T>({N, D}), TensorT<T>({D, M}), TensorT<T>({M})};
    gemm_nt<T>(N, D, M, dy.data(), w.data(), g.dx.data());
    gemm_tn<T>(D, M, N, x.data(), dy.data(), g.dw.data());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t m = 0; m < M; ++m) g.db[m] += dy.at2(n, m);
    return g;
}

// ---------------------------------------------------------------------------
// Dropout (inverted: survivors scaled by 1/(1-rate) at train time)
// ---------------------------------------------------------------------------

template <typename T>
struct DropoutOut {
    TensorT<T> y;
    std::vector<uint8_t> mask;  // empty in eval mode
};

template <typename T>
DropoutOut<T> dropout_forward(const TensorT<T>& x, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ParameterError("dropout rate must be in [0,1), got " + std::to_string(rate));
    DropoutOut<T> out;
    if (!train || rate == 0.0) {
        out.y = x;
        if (train) out.mask.assign(size_t(x.numel()), 1);
        return out;
    }
    out.y = TensorT<T>(x.shape());
    out.mask.resize(size_t(x.numel()));
    const T scale = T(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < x.numel(); ++i) {
        const bool keep = rng.next_double() >= rate;
        out.mask[size_t(i)] = keep ? 1 : 0;
        out.y[i] = keep ? x[i] * scale : T(0);
    }
    return out;
}

template <typename T>
TensorT<T> dropout_backward(const TensorT<T>& dy, const std::vector<uint8_t>& mask, double rate) {
    if (mask.size() != size_t(dy.numel()))
        throw StateError("dropout_backward: mask cache does not match upstream");
    TensorT<T> dx(dy.shape());
    const T scale = T(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = mask[size_t(i)] ? dy[i] * scale : T(0);
    return dx;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy (row-max stabilized)
// ---------------------------------------------------------------------------

template <typename T>
struct SoftmaxXent {
    T loss;
    TensorT<T> probs;
    TensorT<T> dlogits;
};

template <typename T>
SoftmaxXent<T> softmax_cross_entropy(const TensorT<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw DimensionError("softmax_cross_entropy expects 2-d logits, got " + logits.shape_string());
    const int64_t N = logits.dim(0), C = logits.dim(1);
    if (int64_t(labels.size()) != N)
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                             std::to_string(N));
    for (int64_t n = 0; n < N; ++n)
        if (labels[size_t(n)] < 0 || labels[size_t(n)] >= C)
            throw ParameterError("label " + std::to_string(labels[size_t(n)]) + " out of range [0," +
                                 std::to_string(C) + ") at row " + std::to_string(n));

    SoftmaxXent<T> out{T(0), TensorT<T>({N, C}), TensorT<T>({N, C})};
    double loss = 0.0;
    for (int64_t n = 0; n < N; ++n) {
        const T* row = logits.data() + n * C;
        T mx = row[0];
        for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        T sum = 0;
        T* p = out.probs.data() + n * C;
        for (int64_t c = 0; c < C; ++c) {
            p[c] = std::exp(row[c] - mx);
            sum += p[c];
        }
        for (int64_t c = 0; c < C; ++c) p[c] /= sum;
        loss -= std::log(double(p[labels[size_t(n)]]));
    }
    out.loss = T(loss / double(N));
    for (int64_t n = 0; n < N; ++n) {
        const T* p = out.probs.data() + n * C;
        T* d = out.dlogits.data() + n * C;
        for (int64_t c = 0; c < C; ++c) d[c] = p[c] / T(N);
        d[labels[size_t(n)]] -= T(1) / T(N);
    }
    return out;
}

// argmax over the class axis of a [N,C] tensor
template <typename T>
std::vector<int> argmax_rows(const TensorT<T>& t) {
    const int64_t N = t.dim(0), C = t.dim(1);
    std::vector<int> out(static_cast<size_t>(N), 0);
    for (int64_t n = 0; n < N; ++n) {
        const T* row = t.data() + n * C;
        int best = 0;
        for (int64_t c = 1; c < C; ++c)
            if (row[c] > row[best]) best = int(c);
        out[size_t(n)] = best;
    }
    return out;
}

}  // namespace nn
}  // namespace leafnet
