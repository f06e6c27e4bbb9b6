#pragma once

// Riemann theta functions with half-integer characteristics on the surface,
// with derivatives to third order and lattice reduction of the argument. The
// order-2 basis of H^0(L^2) is realized as Theta_sigma(z) = th[sigma/2,0](2z, 2tau).
//
// Values are returned in log-split form: full value = exp(log_factor) * v.
// The split quantities stay O(1) for arguments anywhere in C^2, and linear
// conditions applied to the split jet differ from the true ones by the common
// factor exp(log_factor) only, so ranks and zero sets are unaffected.

#include <array>
#include <cmath>
#include <complex>

#include "ppas/errors.hpp"
#include "ppas/surface.hpp"

namespace ppas {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Half-integer theta characteristic [a; b], entries in {0, 1/2}.
struct Characteristic {
    RVec2 a{0.0, 0.0};
    RVec2 b{0.0, 0.0};

    Characteristic() = default;
    Characteristic(double a1, double a2, double b1, double b2) : a(a1, a2), b(b1, b2) {
        auto half = [](double x) { return x == 0.0 || x == 0.5; };
        if (!half(a1) || !half(a2) || !half(b1) || !half(b2))
            throw InputError("Characteristic: entries must be 0 or 1/2");
    }

    static Characteristic zero() { return Characteristic(); }

    /// 4 a.b mod 2; odd characteristics have theta vanishing at the origin.
    int parity() const {
        const double s = 4.0 * (a[0] * b[0] + a[1] * b[1]);
        return static_cast<int>(std::llround(s)) & 1;
    }
};

struct ThetaValue {
    cplx log_factor{0.0, 0.0};
    cplx reduced_value{0.0, 0.0};
    cplx value() const { return std::exp(log_factor) * reduced_value; }
};

/// Log-split jet of the full theta function: value, gradient, Hessian and
/// (optionally) the symmetric third-derivative tensor, all divided by
/// exp(log_factor). Third-order components are stored as
/// d3[m] = d^3 theta / dz_i dz_j dz_k with m = i+j+k (0-based indices).
struct ThetaJet {
    cplx log_factor{0.0, 0.0};
    cplx v{0.0, 0.0};
    CVec2 g{cplx(0, 0), cplx(0, 0)};
    CMat2 h = CMat2::Zero();
    std::array<cplx, 4> d3{cplx(0, 0), cplx(0, 0), cplx(0, 0), cplx(0, 0)};
    int order = 2;

    cplx value() const { return std::exp(log_factor) * v; }
    CVec2 gradient() const { return std::exp(log_factor) * g; }
    CMat2 hessian() const { return std::exp(log_factor) * h; }

    cplx third(int i, int j, int k) const { return d3[i + j + k]; }

    /// D_t^3 applied to the split jet.
    cplx third_directional(const CVec2& t) const {
        const cplx t1 = t[0], t2 = t[1];
        return t1 * t1 * t1 * d3[0] + 3.0 * t1 * t1 * t2 * d3[1] +
               3.0 * t1 * t2 * t2 * d3[2] + t2 * t2 * t2 * d3[3];
    }
};

namespace detail {

struct Reduction {
    CVec2 z_red;       // argument moved into the fundamental cell
    RVec2 k, m;        // integer shift: z = z_red + m + tau k
    cplx log_factor0;  // prefactor exponent for the b = 0, a = 0 part
};

inline Reduction reduce_argument(const CVec2& z, const PeriodMatrix& tau) {
    Reduction r;
    const RVec2 imz(z[0].imag(), z[1].imag());
    const RVec2 y = tau.imag_inverse() * imz;
    r.k = RVec2(std::round(y[0]), std::round(y[1]));
    const CMat2 t = tau.matrix();
    CVec2 z1 = z;
    z1[0] -= t(0, 0) * r.k[0] + t(0, 1) * r.k[1];
    z1[1] -= t(1, 0) * r.k[0] + t(1, 1) * r.k[1];
    const RVec2 rez1(z1[0].real(), z1[1].real());
    const RVec2 pq = rez1 - tau.real() * (y - r.k);
    r.m = RVec2(std::round(pq[0]), std::round(pq[1]));
    r.z_red = z1;
    r.z_red[0] -= r.m[0];
    r.z_red[1] -= r.m[1];
    // theta(z) = exp(-pi i k^T tau k - 2 pi i k^T (z_red + m + b) + 2 pi i a^T m) theta(z_red)
    const cplx I(0.0, 1.0);
    cplx ktk = t(0, 0) * r.k[0] * r.k[0] + 2.0 * t(0, 1) * r.k[0] * r.k[1] +
               t(1, 1) * r.k[1] * r.k[1];
    cplx kz = r.k[0] * (r.z_red[0] + r.m[0]) + r.k[1] * (r.z_red[1] + r.m[1]);
    r.log_factor0 = -kPi * I * ktk - 2.0 * kPi * I * kz;
    return r;
}

/// Direct truncated series at an already-reduced argument; accumulates value,
/// gradient, Hessian and third-order terms as requested.
inline ThetaJet theta_series(const Characteristic& ch, const CVec2& z, const PeriodMatrix& tau,
                             int radius, int order) {
    const cplx I(0.0, 1.0);
    const cplx t11 = tau.t11(), t12 = tau.t12(), t22 = tau.t22();
    const cplx w1 = z[0] + ch.b[0], w2 = z[1] + ch.b[1];
    const int N = radius;
    const int W = 2 * N + 1;

    // inner-index table: E2[j] = exp(pi i t22 u2^2 + 2 pi i u2 w2), u2 = j - N + a2
    std::vector<cplx> e2(W), f2(W);
    for (int j = 0; j < W; ++j) {
        const double u2 = static_cast<double>(j - N) + ch.a[1];
        e2[j] = std::exp(kPi * I * t22 * u2 * u2 + 2.0 * kPi * I * u2 * w2);
        f2[j] = 2.0 * kPi * I * u2;
    }

    ThetaJet out;
    out.order = order;
    double max_term = 0.0;
    for (int i = 0; i < W; ++i) {
        const double u1 = static_cast<double>(i - N) + ch.a[0];
        const cplx a1 = std::exp(kPi * I * t11 * u1 * u1 + 2.0 * kPi * I * u1 * w1);
        const cplx wstep = std::exp(2.0 * kPi * I * t12 * u1);
        // running cross factor exp(2 pi i t12 u1 u2) starting at u2 = -N + a2
        cplx cross = std::exp(2.0 * kPi * I * t12 * u1 * (static_cast<double>(-N) + ch.a[1]));
        const cplx f1 = 2.0 * kPi * I * u1;
        for (int j = 0; j < W; ++j) {
            const cplx term = a1 * e2[j] * cross;
            cross *= wstep;
            const double mag = std::abs(term);
            if (mag > max_term) max_term = mag;
            out.v += term;
            if (order >= 1) {
                out.g[0] += f1 * term;
                out.g[1] += f2[j] * term;
            }
            if (order >= 2) {
                out.h(0, 0) += f1 * f1 * term;
                out.h(0, 1) += f1 * f2[j] * term;
                out.h(1, 1) += f2[j] * f2[j] * term;
            }
            if (order >= 3) {
                out.d3[0] += f1 * f1 * f1 * term;
                out.d3[1] += f1 * f1 * f2[j] * term;
                out.d3[2] += f1 * f2[j] * f2[j] * term;
                out.d3[3] += f2[j] * f2[j] * f2[j] * term;
            }
        }
    }
    out.h(1, 0) = out.h(0, 1);

    // Gaussian tail estimate over the omitted shells, including the
    // polynomial derivative factors for the requested order.
    const double lam = tau.min_imag_eigenvalue();
    const RVec2 imw(w1.imag(), w2.imag());
    const double rho = imw.norm();
    const double ahat = std::max(std::abs(ch.a[0]), std::abs(ch.a[1]));
    double tail = 0.0;
    for (int s = N + 1; s <= N + 60; ++s) {
        const double t = static_cast<double>(s) - ahat;
        const double amp = std::pow(2.0 * kPi * (s + 1.0), order);
        const double shell = (8.0 * s + 4.0) * amp *
                             std::exp(-kPi * lam * t * t + 2.0 * kPi * rho * (s + ahat));
        tail += shell;
        if (shell < 1e-300) break;
    }
    if (tail > 1e-12 * max_term)
        throw TruncationInsufficientError(
            "theta series tail " + std::to_string(tail) + " exceeds 1e-12 of leading term " +
            std::to_string(max_term) + " at truncation radius " + std::to_string(N));
    return out;
}

/// Fold the quasi-periodicity correction d = -2 pi i k into a raw series jet,
/// so the result represents exp(-log_factor) * (full-function derivatives).
inline void apply_shift_correction(ThetaJet& jet, const RVec2& k) {
    if (k[0] == 0.0 && k[1] == 0.0) return;
    const cplx I(0.0, 1.0);
    const CVec2 d(-2.0 * kPi * I * k[0], -2.0 * kPi * I * k[1]);
    if (jet.order >= 3) {
        std::array<cplx, 4> t = jet.d3;
        auto H = [&](int i, int j) { return jet.h(i, j); };
        auto G = [&](int i) { return jet.g[i]; };
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j)
                for (int l = j; l < 2; ++l) {
                    cplx add = d[i] * H(j, l) + d[j] * H(i, l) + d[l] * H(i, j);
                    add += d[i] * d[j] * G(l) + d[i] * d[l] * G(j) + d[j] * d[l] * G(i);
                    add += d[i] * d[j] * d[l] * jet.v;
                    t[i + j + l] += add;
                }
        jet.d3 = t;
    }
    if (jet.order >= 2) {
        CMat2 h = jet.h;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                h(i, j) += d[i] * jet.g[j] + d[j] * jet.g[i] + d[i] * d[j] * jet.v;
        jet.h = h;
    }
    if (jet.order >= 1) {
        jet.g[0] += d[0] * jet.v;
        jet.g[1] += d[1] * jet.v;
    }
}

}  // namespace detail

/// Theta jet at an arbitrary argument: the argument is translated into the
/// fundamental cell and the exact quasi-periodicity factor is carried in
/// log_factor. Derivatives are of the full function, in split form.
inline ThetaJet theta_jet(const Characteristic& ch, const CVec2& z, const PeriodMatrix& tau,
                          int truncation, int order = 2) {
    if (truncation < 3) throw InputError("theta: truncation radius must be >= 3");
    const detail::Reduction red = detail::reduce_argument(z, tau);
    ThetaJet jet = detail::theta_series(ch, red.z_red, tau, truncation, order);
    detail::apply_shift_correction(jet, red.k);
    const cplx I(0.0, 1.0);
    jet.log_factor = red.log_factor0 -
                     2.0 * kPi * I * (red.k[0] * ch.b[0] + red.k[1] * ch.b[1]) +
                     2.0 * kPi * I * (ch.a[0] * red.m[0] + ch.a[1] * red.m[1]);
    return jet;
}

/// theta[a;b](z, tau), literal series convention; order-2 arguments are the
/// caller's responsibility (pass 2z and 2tau).
inline ThetaValue theta(const Characteristic& ch, const CVec2& z, const PeriodMatrix& tau,
                        int truncation) {
    const ThetaJet jet = theta_jet(ch, z, tau, truncation, 0);
    return ThetaValue{jet.log_factor, jet.v};
}

namespace detail {
inline Characteristic second_order_char(int sigma) {
    return Characteristic(0.5 * ((sigma >> 1) & 1), 0.5 * (sigma & 1), 0.0, 0.0);
}
}  // namespace detail

/// Jets of the four twisted basis sections z -> Theta_sigma(z + twist/2),
/// computed as theta[sigma/2;0](2z + twist, 2tau) with the chain rule applied,
/// in the fixed sigma order 00, 01, 10, 11. All four share one log_factor
/// (the per-sigma phase is folded into the values), so linear combinations of
/// the split jets are meaningful.
inline std::array<ThetaJet, 4> basis_L2_jet(const CVec2& z, const CVec2& twist_embed,
                                            const PeriodMatrix& tau, int truncation,
                                            int order = 2) {
    if (truncation < 3) throw InputError("basis_L2: truncation radius must be >= 3");
    const PeriodMatrix tau2 = tau.doubled();
    const CVec2 arg = 2.0 * z + twist_embed;
    const detail::Reduction red = detail::reduce_argument(arg, tau2);
    const cplx I(0.0, 1.0);
    std::array<ThetaJet, 4> out;
    for (int sigma = 0; sigma < 4; ++sigma) {
        const Characteristic ch = detail::second_order_char(sigma);
        ThetaJet jet = detail::theta_series(ch, red.z_red, tau2, truncation, order);
        detail::apply_shift_correction(jet, red.k);
        // fold the sigma-dependent unit phase exp(2 pi i a.m) into the values
        const cplx phase = std::exp(2.0 * kPi * I * (ch.a[0] * red.m[0] + ch.a[1] * red.m[1]));
        jet.v *= phase;
        jet.g *= phase;
        jet.h *= phase;
        for (auto& c : jet.d3) c *= phase;
        // chain rule for the doubled argument: d/dz = 2 d/darg
        jet.g *= 2.0;
        jet.h *= 4.0;
        for (auto& c : jet.d3) c *= 8.0;
        jet.log_factor = red.log_factor0;
        out[sigma] = jet;
    }
    return out;
}

/// Values of the untwisted order-2 basis Theta_sigma(z), sigma in {00,01,10,11}.
inline std::array<cplx, 4> basis_L2(const CVec2& z, const PeriodMatrix& tau, int truncation) {
    const auto jets = basis_L2_jet(z, CVec2(cplx(0, 0), cplx(0, 0)), tau, truncation, 0);
    std::array<cplx, 4> vals;
    for (int s = 0; s < 4; ++s) vals[s] = jets[s].value();
    return vals;
}

}  // namespace ppas
