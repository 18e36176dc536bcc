#include "ivprop/tensor.hpp"

#include <cmath>
#include <numeric>

namespace ivp {

static std::size_t shape_size(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) {
        if (d == 0) throw ShapeError("Tensor: zero dimension in " + shape_str(s));
        n *= d;
    }
    return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    const std::size_t n = shape_size(shape);
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

Tensor Tensor::vector(std::vector<double> v) {
    Tensor t;
    t.shape = {v.size()};
    t.data = std::move(v);
    if (t.data.empty()) throw ShapeError("Tensor: empty vector");
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    Tensor t;
    t.shape = {rows, cols};
    if (v.size() != rows * cols)
        throw ShapeError("Tensor: matrix data size " + std::to_string(v.size()) +
                         " != " + shape_str(t.shape));
    t.data = std::move(v);
    return t;
}

Tensor Tensor::checked(std::vector<std::size_t> shape, std::vector<double> v) {
    const std::size_t n = shape_size(shape);
    if (v.size() != n)
        throw ShapeError("Tensor: data size " + std::to_string(v.size()) +
                         " != shape " + shape_str(shape));
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(v);
    if (!t.all_finite())
        throw std::invalid_argument("Tensor: non-finite entry rejected");
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

}  // namespace ivp
