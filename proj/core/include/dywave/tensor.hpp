#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dywave {

namespace detail {

// Value-semantic payload. `new double[n]` without parens leaves the block
// uninitialized, which is what the no-init tensor path relies on.
class Buffer {
public:
    Buffer() noexcept = default;

    explicit Buffer(std::size_t n, bool zero = true) : n_(n) {
        if (n_) p_ = zero ? new double[n_]() : new double[n_];
    }

    Buffer(const Buffer& o) : n_(o.n_) {
        if (n_) {
            p_ = new double[n_];
            std::copy(o.p_, o.p_ + n_, p_);
        }
    }

    Buffer(Buffer&& o) noexcept : p_(o.p_), n_(o.n_) {
        o.p_ = nullptr;
        o.n_ = 0;
    }

    Buffer& operator=(const Buffer& o) {
        if (this != &o) {
            if (n_ != o.n_) {
                reset();
                if (o.n_) p_ = new double[o.n_];
                n_ = o.n_;
            }
            if (n_) std::copy(o.p_, o.p_ + n_, p_);
        }
        return *this;
    }

    Buffer& operator=(Buffer&& o) noexcept {
        if (this != &o) {
            reset();
            p_ = o.p_;
            n_ = o.n_;
            o.p_ = nullptr;
            o.n_ = 0;
        }
        return *this;
    }

    ~Buffer() { reset(); }

    double* data() noexcept { return p_; }
    const double* data() const noexcept { return p_; }
    std::size_t size() const noexcept { return n_; }

private:
    void reset() noexcept {
        delete[] p_;
        p_ = nullptr;
        n_ = 0;
    }

    double* p_ = nullptr;
    std::size_t n_ = 0;
};

} // namespace detail

// requests storage without the zero-fill; every element must be written
struct NoInitTag {};
inline constexpr NoInitTag no_init{};

// Dense row-major array of doubles. Shapes are explicit; ops that need a
// particular rank check it themselves and complain with the offending
// dimension, since silent broadcasting is how shape bugs hide.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(numel_of(shape_), true) {}

    Tensor(std::vector<std::size_t> shape, NoInitTag)
        : shape_(std::move(shape)), data_(numel_of(shape_), false) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(numel_of(shape_), false) {
        if (data.size() != data_.size())
            throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape product " +
                                        std::to_string(data_.size()));
        std::copy(data.begin(), data.end(), data_.data());
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape), no_init);
        std::fill(t.data(), t.data() + t.numel(), v);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor vector(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }

    std::size_t dim(std::size_t i) const {
        if (i >= shape_.size())
            throw std::out_of_range("tensor: dim index " + std::to_string(i) + " out of rank " +
                                    std::to_string(shape_.size()));
        return shape_[i];
    }

    // Rows/cols of a rank-2 tensor; rank-1 is treated as a single row.
    std::size_t rows() const { return rank() == 1 ? 1 : dim(0); }
    std::size_t cols() const { return rank() == 1 ? dim(0) : dim(1); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_.data()[i]; }
    double operator[](std::size_t i) const { return data_.data()[i]; }

    double& at2(std::size_t r, std::size_t c) { return data_.data()[r * cols() + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_.data()[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i)
            s += (i ? "x" : "") + std::to_string(shape_[i]);
        return s + "]";
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) throw std::invalid_argument("tensor: zero dimension");
            n *= d;
        }
        return n;
    }

private:
    std::vector<std::size_t> shape_;
    detail::Buffer data_;
};

} // namespace dywave
