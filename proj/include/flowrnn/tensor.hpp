#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace flowrnn {

// Dense row-major matrix of doubles. Rank 2 is all this library needs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n);

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

struct Vector {
    std::vector<double> data;

    Vector() = default;
    explicit Vector(std::size_t n, double fill = 0.0) : data(n, fill) {}
    Vector(std::initializer_list<double> init) : data(init) {}

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

// Deterministic 64-bit generator: xoshiro256** seeded through splitmix64.
// The algorithm is fixed so that a given seed produces the same stream on
// every platform; no std::random_device or distribution objects are used
// anywhere in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double uniform();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (the spare value is cached)
    double normal();
    // unbiased integer in [0, n), n > 0
    std::uint64_t below(std::uint64_t n);

    // Independent child stream for (seed, stream) pairs. Used to make
    // per-condition generation order-independent.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// activations
double sigmoid(double x);
double tanh_act(double x);
double relu(double x);

Vector matvec(const Matrix& m, const Vector& v);
// transpose product m^T * v (v.size() == m.rows)
Vector matvec_t(const Matrix& m, const Vector& v);
// m += a * b^T
void add_outer(Matrix& m, const Vector& a, const Vector& b);

Vector softmax(const Vector& logits);

}  // namespace flowrnn
