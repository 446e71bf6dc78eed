#include "sdrnet/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sdrnet/errors.hpp"

namespace sdrnet {

namespace {

std::int64_t product(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative extent in tensor shape");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_in, float fill)
    : shape(std::move(shape_in)), data(static_cast<std::size_t>(product(shape)), fill) {}

Tensor Tensor::scalar(float v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

Tensor Tensor::vec(std::vector<float> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<float> values) {
    if (static_cast<std::int64_t>(values.size()) != static_cast<std::int64_t>(rows) * cols)
        throw DimensionError("matrix(): value count does not match rows*cols");
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

std::int64_t Tensor::numel() const {
    return static_cast<std::int64_t>(data.size());
}

int Tensor::rows() const {
    if (shape.size() != 2) throw DimensionError("rows(): tensor is not rank 2, shape " + shape_str());
    return shape[0];
}

int Tensor::cols() const {
    if (shape.size() != 2) throw DimensionError("cols(): tensor is not rank 2, shape " + shape_str());
    return shape[1];
}

float& Tensor::at(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols() + c];
}

float Tensor::at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols() + c];
}

float* Tensor::row_ptr(int r) {
    return data.data() + static_cast<std::size_t>(r) * cols();
}

const float* Tensor::row_ptr(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols();
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out) {
    const int m = a.rows(), k = a.cols();
    const int k2 = b.rows(), n = b.cols();
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() + " * " + b.shape_str());
    out = Tensor({m, n});
    for (int i = 0; i < m; ++i) {
        const float* arow = a.row_ptr(i);
        float* orow = out.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const float av = arow[p];
            if (av == 0.0f) continue;  // MNIST rows are mostly zero
            const float* brow = b.row_ptr(p);
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor out;
    matmul_into(a, b, out);
    return out;
}

void matmul_grad_a(const Tensor& g, const Tensor& b, Tensor& grad_a) {
    const int m = g.rows(), n = g.cols(), k = b.rows();
    if (b.cols() != n || grad_a.rows() != m || grad_a.cols() != k)
        throw DimensionError("matmul_grad_a: shape mismatch");
    for (int i = 0; i < m; ++i) {
        const float* grow = g.row_ptr(i);
        float* arow = grad_a.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const float* brow = b.row_ptr(p);
            float acc = 0.0f;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            arow[p] += acc;
        }
    }
}

void matmul_grad_b(const Tensor& a, const Tensor& g, Tensor& grad_b) {
    const int m = a.rows(), k = a.cols(), n = g.cols();
    if (g.rows() != m || grad_b.rows() != k || grad_b.cols() != n)
        throw DimensionError("matmul_grad_b: shape mismatch");
    for (int i = 0; i < m; ++i) {
        const float* arow = a.row_ptr(i);
        const float* grow = g.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const float av = arow[p];
            if (av == 0.0f) continue;
            float* brow = grad_b.row_ptr(p);
            for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
        }
    }
}

void add_inplace(Tensor& dst, const Tensor& src) {
    if (!dst.same_shape(src)) throw DimensionError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void axpy_inplace(Tensor& dst, float alpha, const Tensor& src) {
    if (!dst.same_shape(src)) throw DimensionError("axpy_inplace: shape mismatch");
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += alpha * src.data[i];
}

void scale_inplace(Tensor& dst, float alpha) {
    for (float& v : dst.data) v *= alpha;
}

float max_abs(const Tensor& t) {
    float m = 0.0f;
    for (float v : t.data) m = std::max(m, std::fabs(v));
    return m;
}

float linf_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("linf_distance: shape mismatch");
    float m = 0.0f;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double l2_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("l2_distance: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace sdrnet
