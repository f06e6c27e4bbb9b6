#pragma once

// The principally polarized abelian surface C^2 / (Z^2 + tau Z^2) and point
// arithmetic on it. Points live in real lattice coordinates so that torus
// arithmetic is exact reduction mod 1; embedding into C^2 happens only when a
// theta series is evaluated.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ppas/errors.hpp"

namespace ppas {

using cplx = std::complex<double>;
using CVec2 = Eigen::Vector2cd;
using CMat2 = Eigen::Matrix2cd;
using RVec2 = Eigen::Vector2d;
using RMat2 = Eigen::Matrix2d;

/// Symmetric 2x2 period matrix with positive definite imaginary part.
/// The off-diagonal entry is stored once, so symmetry is exact.
class PeriodMatrix {
public:
    PeriodMatrix(cplx t11, cplx t12, cplx t22) : t11_(t11), t12_(t12), t22_(t22) {
        const RMat2 im = imag();
        if (!(im(0, 0) > 0.0) || !(im.determinant() > 0.0))
            throw InputError("PeriodMatrix: Im(tau) must be positive definite");
        im_inv_ = im.inverse();
        Eigen::SelfAdjointEigenSolver<RMat2> es(im);
        min_im_eig_ = es.eigenvalues().minCoeff();
    }

    /// Default surface used throughout the test and verification suites.
    static PeriodMatrix standard() {
        return PeriodMatrix(cplx(0.0, 1.0), cplx(0.3, 0.2), cplx(0.0, 1.2));
    }

    CMat2 matrix() const {
        CMat2 m;
        m << t11_, t12_, t12_, t22_;
        return m;
    }
    cplx t11() const { return t11_; }
    cplx t12() const { return t12_; }
    cplx t22() const { return t22_; }

    RMat2 real() const {
        RMat2 m;
        m << t11_.real(), t12_.real(), t12_.real(), t22_.real();
        return m;
    }
    RMat2 imag() const {
        RMat2 m;
        m << t11_.imag(), t12_.imag(), t12_.imag(), t22_.imag();
        return m;
    }
    const RMat2& imag_inverse() const { return im_inv_; }
    double min_imag_eigenvalue() const { return min_im_eig_; }

    /// The doubled period matrix, used for the order-2 theta basis.
    PeriodMatrix doubled() const { return PeriodMatrix(2.0 * t11_, 2.0 * t12_, 2.0 * t22_); }

    bool operator==(const PeriodMatrix& o) const {
        return t11_ == o.t11_ && t12_ == o.t12_ && t22_ == o.t22_;
    }

private:
    cplx t11_, t12_, t22_;
    RMat2 im_inv_;
    double min_im_eig_;
};

namespace detail {
inline double mod1(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;  // guards x = -1e-17 rounding to 1.0
    return r;
}
}  // namespace detail

/// A point of the torus in real lattice coordinates: z = p + tau q with
/// p, q in [0,1)^2. Arithmetic is exact on the coordinates, then reduced.
struct TorusPoint {
    RVec2 p{0.0, 0.0};
    RVec2 q{0.0, 0.0};

    TorusPoint() = default;
    TorusPoint(const RVec2& pp, const RVec2& qq) : p(pp), q(qq) { reduce(); }
    TorusPoint(double p1, double p2, double q1, double q2) : p(p1, p2), q(q1, q2) { reduce(); }

    void reduce() {
        p[0] = detail::mod1(p[0]);
        p[1] = detail::mod1(p[1]);
        q[0] = detail::mod1(q[0]);
        q[1] = detail::mod1(q[1]);
    }

    TorusPoint operator+(const TorusPoint& o) const {
        return TorusPoint(p + o.p, q + o.q);
    }
    TorusPoint operator-(const TorusPoint& o) const {
        return TorusPoint(p - o.p, q - o.q);
    }
    TorusPoint operator-() const { return TorusPoint(-p, -q); }

    /// Integer scalar multiple n*x, exact before reduction.
    TorusPoint scaled(long n) const {
        return TorusPoint(static_cast<double>(n) * p, static_cast<double>(n) * q);
    }

    std::array<double, 4> coords() const { return {p[0], p[1], q[0], q[1]}; }

    bool operator<(const TorusPoint& o) const {
        auto a = coords(), b = o.coords();
        return a < b;
    }
};

/// z = p + tau q in C^2.
inline CVec2 embed(const TorusPoint& pt, const PeriodMatrix& tau) {
    const CMat2 t = tau.matrix();
    CVec2 z;
    z[0] = cplx(pt.p[0], 0.0) + t(0, 0) * pt.q[0] + t(0, 1) * pt.q[1];
    z[1] = cplx(pt.p[1], 0.0) + t(1, 0) * pt.q[0] + t(1, 1) * pt.q[1];
    return z;
}

/// Inverse of embed: recover lattice coordinates from a complex point,
/// reduced into [0,1)^4.
inline TorusPoint torus_point_from_embedding(const CVec2& z, const PeriodMatrix& tau) {
    const RVec2 imz(z[0].imag(), z[1].imag());
    const RVec2 q = tau.imag_inverse() * imz;
    const RVec2 rez(z[0].real(), z[1].real());
    const RVec2 p = rez - tau.real() * q;
    return TorusPoint(p, q);
}

/// Distance between torus points: minimum of |embed(a - b + lambda)| over the
/// nearby lattice translates lambda. Symmetric and translation invariant.
inline double torus_distance(const TorusPoint& a, const TorusPoint& b, const PeriodMatrix& tau) {
    RVec2 dp = a.p - b.p, dq = a.q - b.q;
    // center the coordinate differences into [-1/2, 1/2)
    for (int i = 0; i < 2; ++i) {
        dp[i] -= std::round(dp[i]);
        dq[i] -= std::round(dq[i]);
    }
    const RMat2 re = tau.real(), im = tau.imag();
    double best = std::numeric_limits<double>::infinity();
    for (int m1 = -1; m1 <= 1; ++m1)
        for (int m2 = -1; m2 <= 1; ++m2)
            for (int n1 = -1; n1 <= 1; ++n1)
                for (int n2 = -1; n2 <= 1; ++n2) {
                    const RVec2 pp(dp[0] + m1, dp[1] + m2);
                    const RVec2 qq(dq[0] + n1, dq[1] + n2);
                    const RVec2 rex = pp + re * qq;
                    const RVec2 imx = im * qq;
                    const double d2 = rex.squaredNorm() + imx.squaredNorm();
                    if (d2 < best) best = d2;
                }
    return std::sqrt(best);
}

/// The 16 points of order 2, ordered lexicographically in (q, p).
inline std::vector<TorusPoint> two_torsion() {
    std::vector<TorusPoint> pts;
    pts.reserve(16);
    const double h[2] = {0.0, 0.5};
    for (int q1 = 0; q1 < 2; ++q1)
        for (int q2 = 0; q2 < 2; ++q2)
            for (int p1 = 0; p1 < 2; ++p1)
                for (int p2 = 0; p2 < 2; ++p2)
                    pts.emplace_back(h[p1], h[p2], h[q1], h[q2]);
    return pts;
}

/// Evaluation parameters for one surface.
struct SurfaceConfig {
    PeriodMatrix tau = PeriodMatrix::standard();
    int truncation_radius = 8;
    double point_tol = 1e-6;
    double rank_tol = 1e-6;
    std::uint64_t seed = 20240901ull;

    void validate() const {
        if (truncation_radius < 3)
            throw InputError("SurfaceConfig: truncation_radius must be >= 3");
        if (!(point_tol > 0.0) || point_tol > 1e-3)
            throw InputError("SurfaceConfig: point_tol must lie in (0, 1e-3]");
        if (!(rank_tol > 0.0) || rank_tol > 1e-3)
            throw InputError("SurfaceConfig: rank_tol must lie in (0, 1e-3]");
    }
};

/// Deterministic uniform [0,1) draw; avoids the implementation-defined
/// std::uniform_real_distribution so runs reproduce across toolchains.
inline double uniform01(std::uint64_t& state) {
    // splitmix64 step
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    double u01() { return uniform01(state); }
    TorusPoint torus_point() {
        const double a = u01(), b = u01(), c = u01(), d = u01();
        return TorusPoint(a, b, c, d);
    }
    CVec2 direction() {
        // uniform-ish complex direction, unit norm
        CVec2 t(cplx(u01() - 0.5, u01() - 0.5), cplx(u01() - 0.5, u01() - 0.5));
        if (t.norm() < 1e-3) t = CVec2(cplx(1, 0), cplx(0, 0));
        return t / t.norm();
    }
    /// Derived generator for an independent stream.
    Rng fork(std::uint64_t salt) const {
        return Rng(state ^ (0x9e3779b97f4a7c15ull * (salt + 0x632be59bd9b4e019ull)));
    }
};

}  // namespace ppas
