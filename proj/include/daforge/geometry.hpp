#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "daforge/errors.hpp"

namespace daforge {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    Vec3 normalized() const {
        double n = norm();
        return {x / n, y / n, z / n};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Mat3 {
    // row-major
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    static Mat3 diagonal(double a, double b, double c) {
        Mat3 r;
        r.m[0][0] = a; r.m[1][1] = b; r.m[2][2] = c;
        return r;
    }

    double& operator()(int i, int j) { return m[i][j]; }
    double operator()(int i, int j) const { return m[i][j]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }
    Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
             - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
             + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    double max_abs() const {
        double r = 0;
        for (const auto& row : m)
            for (double v : row) r = std::max(r, std::abs(v));
        return r;
    }
    // adjugate: adj(M) * M = det(M) * I
    Mat3 adjugate() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
                const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
                r.m[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            }
        return r;
    }
    Mat3 inverse() const {
        const double d = det();
        if (d == 0.0) throw numerical_error("Mat3::inverse: singular matrix");
        Mat3 r = adjugate();
        for (auto& row : r.m)
            for (double& v : row) v /= d;
        return r;
    }
};

// 3x3 integer matrix with exact arithmetic (overflow-checked products).
struct Mat3i {
    std::array<std::array<std::int64_t, 3>, 3> m{};

    static Mat3i identity() {
        Mat3i r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1;
        return r;
    }

    std::int64_t& operator()(int i, int j) { return m[i][j]; }
    std::int64_t operator()(int i, int j) const { return m[i][j]; }
    bool operator==(const Mat3i& o) const { return m == o.m; }

    static std::int64_t checked_narrow(__int128 v, const char* what) {
        constexpr __int128 lim = static_cast<__int128>(1) << 62;
        if (v >= lim || v <= -lim)
            throw numerical_error(std::string("integer overflow in ") + what);
        return static_cast<std::int64_t>(v);
    }

    Mat3i operator*(const Mat3i& o) const {
        Mat3i r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                __int128 s = 0;
                for (int k = 0; k < 3; ++k)
                    s += static_cast<__int128>(m[i][k]) * o.m[k][j];
                r.m[i][j] = checked_narrow(s, "Mat3i::operator*");
            }
        return r;
    }

    Mat3i pow(int e) const {
        Mat3i r = identity();
        Mat3i b = *this;
        while (e > 0) {
            if (e & 1) r = r * b;
            b = (e > 1) ? b * b : b;
            e >>= 1;
        }
        return r;
    }

    std::int64_t det() const {
        __int128 d = static_cast<__int128>(m[0][0]) * m[1][1] * m[2][2]
                   + static_cast<__int128>(m[0][1]) * m[1][2] * m[2][0]
                   + static_cast<__int128>(m[0][2]) * m[1][0] * m[2][1]
                   - static_cast<__int128>(m[0][2]) * m[1][1] * m[2][0]
                   - static_cast<__int128>(m[0][0]) * m[1][2] * m[2][1]
                   - static_cast<__int128>(m[0][1]) * m[1][0] * m[2][2];
        return checked_narrow(d, "Mat3i::det");
    }

    // adjugate: adj(M) * M = det(M) * I
    Mat3i adjugate() const {
        auto cof = [&](int i, int j) -> std::int64_t {
            const int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
            const int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
            __int128 v = static_cast<__int128>(m[r0][c0]) * m[r1][c1]
                       - static_cast<__int128>(m[r0][c1]) * m[r1][c0];
            return checked_narrow(v, "Mat3i::adjugate");
        };
        Mat3i a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a.m[j][i] = cof(i, j);
        return a;
    }

    bool symmetric() const {
        return m[0][1] == m[1][0] && m[0][2] == m[2][0] && m[1][2] == m[2][1];
    }

    Mat3 to_double() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = static_cast<double>(m[i][j]);
        return r;
    }
};

// Error-free transformations used by the exact lattice action on the torus.
inline void two_prod(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double t = s - a;
    e = (a - (s - t)) + (b - t);
}

} // namespace daforge
