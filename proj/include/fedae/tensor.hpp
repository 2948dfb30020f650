#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedae/common.hpp"

namespace fedae {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
    out << ']';
    return out.str();
}

/// Dense row-major array with an optional gradient buffer of the same shape.
/// Value type: copies are deep.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
        check_dims();
    }

    BasicTensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
        check_dims();
        if (values_.size() != shape_size(shape_)) {
            throw ShapeError("tensor: " + std::to_string(values_.size()) + " values do not fill shape " +
                             shape_string(shape_));
        }
    }

    static BasicTensor scalar(T value) { return BasicTensor(Shape{}, std::vector<T>{value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T* data() noexcept { return values_.data(); }
    const T* data() const noexcept { return values_.data(); }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    /// Value of a size-1 tensor.
    T item() const {
        if (values_.size() != 1) throw ShapeError("item(): tensor of shape " + shape_string(shape_) + " is not scalar");
        return values_[0];
    }

    bool requires_grad() const noexcept { return requires_grad_; }
    void set_requires_grad(bool on) noexcept { requires_grad_ = on; }

    bool has_grad() const noexcept { return !grad_.empty(); }
    std::span<T> grad() noexcept { return grad_; }
    std::span<const T> grad() const noexcept { return grad_; }

    /// Allocates a zeroed gradient if absent and returns it.
    std::span<T> ensure_grad() {
        if (grad_.size() != values_.size()) grad_.assign(values_.size(), T{0});
        return grad_;
    }
    void set_grad(std::vector<T> grad) {
        if (grad.size() != values_.size()) throw ShapeError("set_grad: gradient size does not match tensor");
        grad_ = std::move(grad);
    }
    void clear_grad() noexcept { grad_.clear(); }

    /// Same values under a new shape with the same element count.
    BasicTensor reshaped(Shape shape) const { return BasicTensor(std::move(shape), values_); }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> converted(values_.begin(), values_.end());
        BasicTensor<U> out(shape_, std::move(converted));
        out.set_requires_grad(requires_grad_);
        return out;
    }

    friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    void check_dims() const {
        for (std::size_t d : shape_) {
            if (d == 0) throw ShapeError("tensor: zero-length dimension in shape " + shape_string(shape_));
        }
    }

    Shape shape_;
    std::vector<T> values_;
    std::vector<T> grad_;
    bool requires_grad_ = false;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

}  // namespace fedae
