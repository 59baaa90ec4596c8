#include "flowrnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flowrnn {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Box-Muller; u1 is kept away from 0 so the log is finite.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    // rejection sampling on the top range keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

Rng Rng::derive(std::uint64_t stream) const {
    std::uint64_t s = seed_ ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(s));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double tanh_act(double x) { return std::tanh(x); }

double relu(double x) { return x > 0.0 ? x : 0.0; }

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size()) {
        throw std::invalid_argument("matvec: matrix " + std::to_string(m.rows) + "x" +
                                    std::to_string(m.cols) + " incompatible with vector of length " +
                                    std::to_string(v.size()));
    }
    Vector out(m.rows);
    const double* row = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

Vector matvec_t(const Matrix& m, const Vector& v) {
    if (m.rows != v.size()) {
        throw std::invalid_argument("matvec_t: matrix " + std::to_string(m.rows) + "x" +
                                    std::to_string(m.cols) + " incompatible with vector of length " +
                                    std::to_string(v.size()));
    }
    Vector out(m.cols);
    const double* row = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
        const double f = v[r];
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += f * row[c];
    }
    return out;
}

void add_outer(Matrix& m, const Vector& a, const Vector& b) {
    if (m.rows != a.size() || m.cols != b.size()) {
        throw std::invalid_argument("add_outer: matrix " + std::to_string(m.rows) + "x" +
                                    std::to_string(m.cols) + " incompatible with vectors of length " +
                                    std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double* row = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
        const double f = a[r];
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += f * b[c];
    }
}

Vector softmax(const Vector& logits) {
    if (logits.size() == 0) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(logits.data.begin(), logits.data.end());
    Vector out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
    return out;
}

}  // namespace flowrnn
