#include "axonad/tensor.hpp"

#include "axonad/error.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace axonad {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    require(product(shape_) == data_.size(), ErrorCode::shape,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_string(shape_));
}

Tensor Tensor::from_matrix(const Mat& m) {
    Tensor t({std::size_t(m.rows()), std::size_t(m.cols())});
    t.mat() = m;
    return t;
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 1;
    return shape_.size() == 1 ? 1 : data_.size() / shape_.back();
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 1;
    return shape_.size() == 1 ? shape_[0] : shape_.back();
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t ParamSet::add(std::string name, Tensor value, bool decay) {
    require(!find(name).has_value(), ErrorCode::config, "duplicate parameter name " + name);
    params_.push_back({std::move(name), std::move(value), decay});
    return params_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    return std::nullopt;
}

Tensor& ParamSet::at(std::string_view name) {
    auto i = find(name);
    require(i.has_value(), ErrorCode::shape, "no parameter named " + std::string(name));
    return params_[*i].value;
}

const Tensor& ParamSet::at(std::string_view name) const {
    auto i = find(name);
    require(i.has_value(), ErrorCode::shape, "no parameter named " + std::string(name));
    return params_[*i].value;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& p : params_) out.params_.push_back({p.name, Tensor(p.value.shape()), p.decay});
    return out;
}

void ParamSet::set_zero() {
    for (auto& p : params_) p.value.fill(0.0);
}

std::size_t ParamSet::element_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

bool ParamSet::all_finite() const {
    for (const auto& p : params_)
        if (!p.value.all_finite()) return false;
    return true;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
        const auto& x = a.params_[i];
        const auto& y = b.params_[i];
        if (x.name != y.name || x.decay != y.decay || !(x.value == y.value)) return false;
    }
    return true;
}

}  // namespace axonad
