#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nlmedium {

using cplx = std::complex<double>;
using cvec3 = Eigen::Vector3cd;
using cmat3 = Eigen::Matrix3cd;

inline constexpr double pi = 3.14159265358979323846;

// Bad input or a request outside the model's domain (CLI exit 2).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its tolerance (CLI exit 3).
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense 3x3x3x3 complex tensor, row-major over (i, j, k, l).
class Rank4 {
public:
    Rank4() { data_.fill(cplx{0.0, 0.0}); }

    cplx& operator()(int i, int j, int k, int l) { return data_[idx(i, j, k, l)]; }
    const cplx& operator()(int i, int j, int k, int l) const { return data_[idx(i, j, k, l)]; }

    cplx& operator[](std::size_t n) { return data_[n]; }
    const cplx& operator[](std::size_t n) const { return data_[n]; }

    static constexpr std::size_t size() { return 81; }

    Rank4& operator+=(const Rank4& o) {
        for (std::size_t n = 0; n < 81; ++n) data_[n] += o.data_[n];
        return *this;
    }
    Rank4& operator*=(cplx s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    friend Rank4 operator+(Rank4 a, const Rank4& b) { return a += b; }
    friend Rank4 operator*(Rank4 a, cplx s) { return a *= s; }
    friend Rank4 operator*(cplx s, Rank4 a) { return a *= s; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Index permutation: out(i0,i1,i2,i3) = this(i_p0, i_p1, i_p2, i_p3).
    Rank4 permuted(std::array<int, 4> p) const {
        Rank4 out;
        std::array<int, 4> i{};
        for (i[0] = 0; i[0] < 3; ++i[0])
            for (i[1] = 0; i[1] < 3; ++i[1])
                for (i[2] = 0; i[2] < 3; ++i[2])
                    for (i[3] = 0; i[3] < 3; ++i[3])
                        out(i[0], i[1], i[2], i[3]) = (*this)(i[p[0]], i[p[1]], i[p[2]], i[p[3]]);
        return out;
    }

private:
    static constexpr std::size_t idx(int i, int j, int k, int l) {
        return static_cast<std::size_t>(((i * 3 + j) * 3 + k) * 3 + l);
    }
    std::array<cplx, 81> data_;
};

inline double max_abs_diff(const Rank4& a, const Rank4& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < 81; ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

inline double max_abs(const cmat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace nlmedium
