#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivp {

class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major double tensor. Rank 1 or 2 covers everything this project
// needs. Value semantics; immutable once handed to the tape.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor scalar(double v) { return full({1}, v); }
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
    // Validating constructor for data entering from outside (files, callers):
    // rejects non-finite entries and shape/size mismatches.
    static Tensor checked(std::vector<std::size_t> shape, std::vector<double> v);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return rank() == 2 ? shape[1] : 1; }
    bool is_scalar() const { return size() == 1; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * shape[1]; }
    double* row_ptr(std::size_t r) { return data.data() + r * shape[1]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

std::string shape_str(const std::vector<std::size_t>& s);

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
}

}  // namespace ivp
