#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sdrnet {

/// Dense row-major float tensor. The unit of all computation in this library.
///
/// Rank is arbitrary but nearly everything is rank 1 (vectors) or rank 2
/// (matrices, batch-major). product(shape) == data.size() always holds.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in, float fill = 0.0f);

    static Tensor scalar(float v);
    static Tensor vec(std::vector<float> values);
    static Tensor matrix(int rows, int cols, std::vector<float> values);

    std::int64_t numel() const;
    bool empty() const { return data.empty(); }

    // Rank-2 accessors. Throw DimensionError when the tensor is not rank 2.
    int rows() const;
    int cols() const;
    float& at(int r, int c);
    float at(int r, int c) const;
    float* row_ptr(int r);
    const float* row_ptr(int r) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

// out = a * b for rank-2 operands; inner dimensions must agree.
Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_into(const Tensor& a, const Tensor& b, Tensor& out);

// Accumulating kernels used by the reverse pass.
// grad_a += g * b^T      (g: m x n, b: k x n  ->  grad_a: m x k)
void matmul_grad_a(const Tensor& g, const Tensor& b, Tensor& grad_a);
// grad_b += a^T * g      (a: m x k, g: m x n  ->  grad_b: k x n)
void matmul_grad_b(const Tensor& a, const Tensor& g, Tensor& grad_b);

void add_inplace(Tensor& dst, const Tensor& src);                 // dst += src
void axpy_inplace(Tensor& dst, float alpha, const Tensor& src);   // dst += alpha*src
void scale_inplace(Tensor& dst, float alpha);

float max_abs(const Tensor& t);
float linf_distance(const Tensor& a, const Tensor& b);
double l2_distance(const Tensor& a, const Tensor& b);

}  // namespace sdrnet
