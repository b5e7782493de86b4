#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "leafnet/common.hpp"

namespace leafnet {

/// Dense row-major tensor.  float carries activations, parameters and
/// gradients during training; the double instantiation exists for
/// finite-difference gradient checking.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int64_t> shape) : shape_(std::move(shape)) {
        for (int64_t d : shape_)
            if (d <= 0) throw DimensionError("tensor dimension must be positive, got " + std::to_string(d));
        data_.assign(size_t(numel_of(shape_)), T(0));
    }

    TensorT(std::initializer_list<int64_t> shape) : TensorT(std::vector<int64_t>(shape)) {}

    static TensorT full(std::vector<int64_t> shape, T v) {
        TensorT t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    const std::vector<int64_t>& shape() const { return shape_; }
    int rank() const { return int(shape_.size()); }
    int64_t dim(int i) const { return shape_[size_t(i)]; }
    int64_t numel() const { return int64_t(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](int64_t i) { return data_[size_t(i)]; }
    const T& operator[](int64_t i) const { return data_[size_t(i)]; }

    // N,C,H,W accessor for the 4-d layouts used by the conv/pool kernels
    T& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data_[size_t(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    const T& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data_[size_t(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }

    T& at2(int64_t r, int64_t c) { return data_[size_t(r * shape_[1] + c)]; }
    const T& at2(int64_t r, int64_t c) const { return data_[size_t(r * shape_[1] + c)]; }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    // shape change without data movement; element count must be preserved
    void reshape(std::vector<int64_t> shape) {
        if (numel_of(shape) != numel())
            throw DimensionError("reshape from " + shape_string(shape_) + " to " + shape_string(shape) +
                                 " changes element count");
        shape_ = std::move(shape);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(double(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (int64_t i = 0; i < numel(); ++i) out[i] = U(data_[size_t(i)]);
        return out;
    }

    static int64_t numel_of(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    static std::string shape_string(const std::vector<int64_t>& shape) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << "]";
        return os.str();
    }

    std::string shape_string() const { return shape_string(shape_); }

private:
    std::vector<int64_t> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace leafnet
