#pragma once

// Test-only oracles and helpers.  Everything in here is deliberately written
// as directly as possible (quadruple loops, explicit window enumeration) and
// shares no code with the kernels it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "leafnet/common.hpp"
#include "leafnet/tensor.hpp"

namespace testutil {

using leafnet::Rng;
using leafnet::TensorD;
using leafnet::TensorT;

// ---------------------------------------------------------------------------
// Independent layer oracles
// ---------------------------------------------------------------------------

// Direct quadruple-nested-loop valid cross-correlation, stride 1.
template <typename T>
TensorT<T> conv2d_oracle(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int64_t OH = H - kh + 1, OW = W - kw + 1;
    TensorT<T> y({N, K, OH, OW});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < K; ++k)
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    T acc = b[k];
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < kh; ++i)
                            for (int64_t j = 0; j < kw; ++j)
                                acc += x.at4(n, c, oy + i, ox + j) * w.at4(k, c, i, j);
                    y.at4(n, k, oy, ox) = acc;
                }
    return y;
}

// Direct window enumeration max pooling.
template <typename T>
TensorT<T> maxpool_oracle(const TensorT<T>& x, int64_t k, int64_t stride) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t OH = (H - k) / stride + 1, OW = (W - k) / stride + 1;
    TensorT<T> y({N, C, OH, OW});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    T best = x.at4(n, c, oy * stride, ox * stride);
                    for (int64_t i = 0; i < k; ++i)
                        for (int64_t j = 0; j < k; ++j)
                            best = std::max(best, x.at4(n, c, oy * stride + i, ox * stride + j));
                    y.at4(n, c, oy, ox) = best;
                }
    return y;
}

// ---------------------------------------------------------------------------
// Central finite differences (64-bit)
// ---------------------------------------------------------------------------

struct GradCheckResult {
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
};

// Compares an analytic gradient of a scalar objective against central finite
// differences.  Relative error is |a-fd| / max(1, |a|, |fd|).
inline GradCheckResult finite_difference_check(TensorD& param, const TensorD& analytic,
                                               const std::function<double()>& objective, double eps = 1e-3) {
    GradCheckResult r;
    for (int64_t i = 0; i < param.numel(); ++i) {
        const double saved = param[i];
        param[i] = saved + eps;
        const double fp = objective();
        param[i] = saved - eps;
        const double fm = objective();
        param[i] = saved;
        const double fd = (fp - fm) / (2.0 * eps);
        const double a = analytic[i];
        const double denom = std::max({1.0, std::fabs(a), std::fabs(fd)});
        const double rel = std::fabs(a - fd) / denom;
        if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_index = i;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Instance generation
//
// Values are a random permutation of a symmetric lattice with fixed spacing,
// so every pair of elements is separated by at least `spacing` and no element
// sits within spacing/2 of zero.  That keeps max-pool argmaxes and ReLU signs
// stable under the +-eps probes of the finite-difference check.
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> lattice_tensor(const std::vector<int64_t>& shape, Rng& rng, double spacing = 0.05) {
    TensorT<T> t(shape);
    const int64_t n = t.numel();
    std::vector<int64_t> perm(static_cast<size_t>(n), 0);
    std::iota(perm.begin(), perm.end(), 0);
    for (int64_t i = n - 1; i > 0; --i) std::swap(perm[size_t(i)], perm[size_t(rng.uniform_int(0, i))]);
    for (int64_t i = 0; i < n; ++i) t[i] = T((double(perm[size_t(i)]) - double(n) / 2.0) * spacing + spacing / 2.0);
    return t;
}

template <typename T>
TensorT<T> uniform_tensor(const std::vector<int64_t>& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorT<T> t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = T(rng.uniform(lo, hi));
    return t;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

// Kolmogorov-Smirnov statistic against U(0,1); samples need not be sorted.
inline double ks_statistic_uniform01(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double f = xs[i];
        d = std::max(d, std::max((double(i) + 1.0) / n - f, f - double(i) / n));
    }
    return d;
}

// Asymptotic KS rejection threshold at significance alpha = 0.001.
inline double ks_threshold_001(size_t n) {
    return 1.9494746035204051 / std::sqrt(double(n));
}

// Pearson chi-square statistic for observed counts against expected counts.
inline double chi_square(const std::vector<int64_t>& observed, const std::vector<double>& expected) {
    double s = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        const double diff = double(observed[i]) - expected[i];
        s += diff * diff / expected[i];
    }
    return s;
}

// chi-square 0.999 quantiles for the degrees of freedom used in tests
inline double chi2_crit_999(int df) {
    switch (df) {
        case 1: return 10.827566;
        case 2: return 13.815511;
        case 3: return 16.266236;
        case 4: return 18.466827;
        case 7: return 24.321886;
        case 9: return 27.877165;
        case 31: return 61.098306;
        case 50: return 86.660815;
        default: throw std::runtime_error("no frozen chi2 quantile for df=" + std::to_string(df));
    }
}

}  // namespace testutil
