#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace axonad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using RowMap = Eigen::Map<RowVec>;
using ConstRowMap = Eigen::Map<const RowVec>;

/// Dense row-major array of doubles with an explicit shape.
///
/// Matrix views treat the last dimension as columns and fold every leading
/// dimension into rows, so a `[K, C_in, C_out]` conv kernel is viewed as a
/// `(K * C_in) x C_out` matrix.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor from_matrix(const Mat& m);
    static Tensor scalar(double v) { return Tensor({1}, v); }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rank() const noexcept { return shape_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;
    MatMap mat() { return {data_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    ConstMatMap mat() const { return {data_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    RowMap row() { return {data_.data(), Eigen::Index(size())}; }
    ConstRowMap row() const { return {data_.data(), Eigen::Index(size())}; }

    bool all_finite() const noexcept;
    void fill(double v);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    // 64-byte aligned so vectorized reductions split identically on every run.
    std::vector<double, Eigen::aligned_allocator<double>> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

struct Param {
    std::string name;
    Tensor value;
    bool decay = false;  // participates in decoupled weight decay
};

/// Ordered collection of named parameter arrays. Order is stable and defines
/// checkpoint layout and optimizer state layout.
class ParamSet {
public:
    std::size_t add(std::string name, Tensor value, bool decay);

    std::size_t size() const noexcept { return params_.size(); }
    Tensor& operator[](std::size_t i) { return params_[i].value; }
    const Tensor& operator[](std::size_t i) const { return params_[i].value; }
    Param& entry(std::size_t i) { return params_[i]; }
    const Param& entry(std::size_t i) const { return params_[i]; }

    std::optional<std::size_t> find(std::string_view name) const;
    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;

    /// Same names, shapes and decay flags, all values zero.
    ParamSet zeros_like() const;
    void set_zero();
    std::size_t element_count() const;
    bool all_finite() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    friend bool operator==(const ParamSet& a, const ParamSet& b);

private:
    std::vector<Param> params_;
};

bool operator==(const ParamSet& a, const ParamSet& b);

}  // namespace axonad
