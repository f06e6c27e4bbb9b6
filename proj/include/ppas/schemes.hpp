#pragma once

// Zero-dimensional subschemes of the surface as lists of jets, and the linear
// condition functionals they impose on holomorphic functions. A functional is
// expressed against a function jet (value / gradient / Hessian at a point) so
// it composes with any section evaluator.

#include <vector>

#include "ppas/errors.hpp"
#include "ppas/surface.hpp"
#include "ppas/theta.hpp"

namespace ppas {

enum class JetKind { reduced, double_pt, curvilinear_triple, y_d, y_e };

inline const char* jet_kind_name(JetKind k) {
    switch (k) {
        case JetKind::reduced: return "reduced";
        case JetKind::double_pt: return "double";
        case JetKind::curvilinear_triple: return "curvilinear";
        case JetKind::y_d: return "yd";
        case JetKind::y_e: return "ye";
    }
    return "?";
}

/// One punctual jet. Meaning of the direction fields by kind:
///   double_pt:          t = tangent direction (unit norm)
///   curvilinear_triple: arc gamma(s) = p + s t + s^2 n, so t = velocity, n = half-acceleration
///   y_d:                t = eta-direction, n = eps-direction (independent)
///   y_e:                full first infinitesimal neighborhood, no directions
struct Jet {
    JetKind kind = JetKind::reduced;
    TorusPoint point;
    CVec2 t{cplx(0, 0), cplx(0, 0)};
    CVec2 n{cplx(0, 0), cplx(0, 0)};

    int length() const {
        switch (kind) {
            case JetKind::reduced: return 1;
            case JetKind::double_pt: return 2;
            default: return 3;
        }
    }

    static Jet reduced(const TorusPoint& p) { return Jet{JetKind::reduced, p, {}, {}}; }
    static Jet double_point(const TorusPoint& p, const CVec2& t) {
        Jet j{JetKind::double_pt, p, t, {}};
        j.normalize_t();
        return j;
    }
    static Jet curvilinear(const TorusPoint& p, const CVec2& t, const CVec2& n) {
        Jet j{JetKind::curvilinear_triple, p, t, n};
        j.normalize_t();
        return j;
    }
    static Jet yd(const TorusPoint& p, const CVec2& eta_dir, const CVec2& eps_dir) {
        Jet j{JetKind::y_d, p, eta_dir, eps_dir};
        if (std::abs(j.t[0] * j.n[1] - j.t[1] * j.n[0]) <
            1e-10 * j.t.norm() * j.n.norm())
            throw InputError("Jet: y_d directions must be linearly independent");
        j.normalize_t();
        const double nn = j.n.norm();
        if (nn == 0.0) throw InputError("Jet: zero direction");
        j.n /= nn;
        return j;
    }
    static Jet ye(const TorusPoint& p) { return Jet{JetKind::y_e, p, {}, {}}; }

    void normalize_t() {
        const double tn = t.norm();
        if (tn == 0.0) throw InputError("Jet: zero direction");
        t /= tn;
    }
};

/// A 0-scheme of length <= 8 as a list of jets with pairwise distinct support.
struct ZeroScheme {
    std::vector<Jet> jets;

    int length() const {
        int n = 0;
        for (const auto& j : jets) n += j.length();
        return n;
    }
};

/// Validating factory; rejects coincident supports (no automatic merge).
inline ZeroScheme make_scheme(std::vector<Jet> jets, const PeriodMatrix& tau,
                              double point_tol) {
    for (size_t i = 0; i < jets.size(); ++i)
        for (size_t j = i + 1; j < jets.size(); ++j)
            if (torus_distance(jets[i].point, jets[j].point, tau) <= point_tol)
                throw InputError("ZeroScheme: jets share a support point");
    ZeroScheme X{std::move(jets)};
    if (X.length() > 8) throw InputError("ZeroScheme: length > 8 not supported");
    if (X.jets.empty()) throw InputError("ZeroScheme: empty scheme");
    return X;
}

inline ZeroScheme make_reduced_scheme(const std::vector<TorusPoint>& pts,
                                      const PeriodMatrix& tau, double point_tol) {
    std::vector<Jet> js;
    js.reserve(pts.size());
    for (const auto& p : pts) js.push_back(Jet::reduced(p));
    return make_scheme(std::move(js), tau, point_tol);
}

/// Jet of a function at a point, as supplied by a section evaluator. The
/// third-order tensor is required only when a functional of second order is
/// differentiated (Jacobian assembly).
struct FunctionJet {
    cplx v{0, 0};
    CVec2 g{cplx(0, 0), cplx(0, 0)};
    CMat2 h = CMat2::Zero();
    std::array<cplx, 4> d3{cplx(0, 0), cplx(0, 0), cplx(0, 0), cplx(0, 0)};

    FunctionJet() = default;
    FunctionJet(const ThetaJet& t) : v(t.v), g(t.g), h(t.h), d3(t.d3) {}
};

/// Linear condition functional L(f) = a f + b . grad f + sum_ij G_ij H_ij(f),
/// evaluated at `at`. `order` is the highest derivative used.
struct Condition {
    TorusPoint at;
    cplx a{0, 0};
    CVec2 b{cplx(0, 0), cplx(0, 0)};
    CMat2 G = CMat2::Zero();
    int order = 0;

    cplx apply(const FunctionJet& f) const {
        cplx r = a * f.v;
        if (order >= 1) r += b[0] * f.g[0] + b[1] * f.g[1];
        if (order >= 2)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) r += G(i, j) * f.h(i, j);
        return r;
    }

    /// L applied to the partial derivative d_l f; needs f.d3 when order = 2.
    cplx apply_dz(const FunctionJet& f, int l) const {
        cplx r = a * f.g[l];
        if (order >= 1) r += b[0] * f.h(0, l) + b[1] * f.h(1, l);
        if (order >= 2)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) r += G(i, j) * f.d3[i + j + l];
        return r;
    }
};

/// The length(X) condition functionals cutting out sections through X,
/// ordered jet by jet.
inline std::vector<Condition> conditions(const ZeroScheme& X) {
    std::vector<Condition> out;
    out.reserve(static_cast<size_t>(X.length()));
    for (const auto& jet : X.jets) {
        Condition ev;
        ev.at = jet.point;
        ev.a = 1.0;
        ev.order = 0;
        switch (jet.kind) {
            case JetKind::reduced:
                out.push_back(ev);
                break;
            case JetKind::double_pt: {
                out.push_back(ev);
                Condition d1{jet.point, 0.0, jet.t, CMat2::Zero(), 1};
                out.push_back(d1);
                break;
            }
            case JetKind::curvilinear_triple: {
                out.push_back(ev);
                Condition d1{jet.point, 0.0, jet.t, CMat2::Zero(), 1};
                out.push_back(d1);
                // second Taylor coefficient of s -> f(gamma(s)): D_t^2 + 2 D_n
                Condition d2{jet.point, 0.0, 2.0 * jet.n, jet.t * jet.t.transpose(), 2};
                out.push_back(d2);
                break;
            }
            case JetKind::y_d: {
                out.push_back(ev);
                Condition d1{jet.point, 0.0, jet.t, CMat2::Zero(), 1};
                out.push_back(d1);
                // dual basis {eval, d_eta, d_eps + 1/2 d_eta^2}
                Condition d2{jet.point, 0.0, jet.n, 0.5 * jet.t * jet.t.transpose(), 2};
                out.push_back(d2);
                break;
            }
            case JetKind::y_e: {
                out.push_back(ev);
                Condition d1{jet.point, 0.0, CVec2(cplx(1, 0), cplx(0, 0)), CMat2::Zero(), 1};
                Condition d2{jet.point, 0.0, CVec2(cplx(0, 0), cplx(1, 0)), CMat2::Zero(), 1};
                out.push_back(d1);
                out.push_back(d2);
                break;
            }
            default:
                throw UnsupportedJetError("conditions: jet kind outside the catalogue");
        }
    }
    return out;
}

/// Result of colength-one enumeration; `has_family` marks the y_e case whose
/// colength-one subschemes form a 1-parameter family (two representatives are
/// returned).
struct ColengthOneResult {
    std::vector<ZeroScheme> subschemes;
    bool has_family = false;
};

inline ColengthOneResult colength_one_subschemes(const ZeroScheme& X) {
    if (X.length() < 2) throw InputError("colength_one_subschemes: need length >= 2");
    ColengthOneResult res;
    for (size_t i = 0; i < X.jets.size(); ++i) {
        const Jet& jet = X.jets[i];
        auto with_replacement = [&](const std::vector<Jet>& repl) {
            std::vector<Jet> js;
            js.reserve(X.jets.size());
            for (size_t k = 0; k < X.jets.size(); ++k) {
                if (k == i) {
                    for (const auto& r : repl) js.push_back(r);
                } else {
                    js.push_back(X.jets[k]);
                }
            }
            res.subschemes.push_back(ZeroScheme{std::move(js)});
        };
        switch (jet.kind) {
            case JetKind::reduced:
                with_replacement({});
                break;
            case JetKind::double_pt:
                with_replacement({Jet::reduced(jet.point)});
                break;
            case JetKind::curvilinear_triple:
                with_replacement({Jet::double_point(jet.point, jet.t)});
                break;
            case JetKind::y_d:
                with_replacement({Jet::double_point(jet.point, jet.t)});
                break;
            case JetKind::y_e:
                with_replacement({Jet::double_point(jet.point, CVec2(cplx(1, 0), cplx(0, 0)))});
                with_replacement({Jet::double_point(jet.point, CVec2(cplx(0, 0), cplx(1, 0)))});
                res.has_family = true;
                break;
        }
    }
    return res;
}

/// Sum over jets of (jet length) x (support point), reduced mod the lattice.
inline TorusPoint scheme_sum(const ZeroScheme& X) {
    RVec2 p(0, 0), q(0, 0);
    for (const auto& jet : X.jets) {
        const double w = static_cast<double>(jet.length());
        p += w * jet.point.p;
        q += w * jet.point.q;
    }
    return TorusPoint(p, q);
}

}  // namespace ppas
