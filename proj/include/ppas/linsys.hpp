#pragma once

// Evaluation matrices and h^0 for the twisted systems |L P_x| and |L^2 P_x|,
// collinearity and intersection solvers for theta translates, the Gauss map
// fiber solver, and singularity analysis of sections of |2l|-translates.
//
// Convention for twists: a twist parameter c (a torus point) acts on the
// order-2 system through the sections z -> Theta_sigma(z + c/2), evaluated as
// theta[sigma/2;0](2z + c_embed, 2tau); on the order-1 system through
// z -> theta(z + c_embed). All jump-locus coordinates downstream are derived
// from these conventions and fixed by the calibration step.

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ppas/errors.hpp"
#include "ppas/schemes.hpp"
#include "ppas/solve.hpp"
#include "ppas/surface.hpp"
#include "ppas/theta.hpp"

namespace ppas {

/// Twist parameter for a translated linear system.
struct TwistParam {
    TorusPoint c;
};

/// A section of the twisted order-2 system: sum_sigma lambda_sigma Theta_sigma(z + c/2).
struct SectionL2 {
    Eigen::Vector4cd lambda;
    TwistParam twist;
};

enum class SingType { node, tacnode, higher };

inline const char* sing_type_name(SingType t) {
    switch (t) {
        case SingType::node: return "node";
        case SingType::tacnode: return "tacnode";
        case SingType::higher: return "higher";
    }
    return "?";
}

struct SingularityReport {
    TorusPoint point;
    SingType type = SingType::node;
    double hessian_condition = 0.0;  // sigma_2 / sigma_1 of the Hessian
};

namespace detail {

/// Rows of the evaluation system for L^i with twist embedding c_hat, in split
/// scale, plus (optionally) the derivative matrices d/d c_hat_l.
struct EvalSystem {
    Eigen::MatrixXcd M;
    std::array<Eigen::MatrixXcd, 2> dM;
    bool has_jacobian = false;
};

inline EvalSystem eval_system(const ZeroScheme& X, int i, const CVec2& c_hat,
                              const SurfaceConfig& cfg, int truncation, bool want_jacobian) {
    if (i != 1 && i != 2) throw InputError("eval_system: i must be 1 or 2");
    const int cols = (i == 2) ? 4 : 1;
    const int rows = X.length();
    EvalSystem sys;
    sys.M.resize(rows, cols);
    if (want_jacobian) {
        sys.dM[0].resize(rows, cols);
        sys.dM[1].resize(rows, cols);
        sys.has_jacobian = true;
    }
    const auto conds = conditions(X);
    // group rows by jet support; one basis evaluation per support point
    int row = 0;
    for (const auto& jet : X.jets) {
        const int jet_rows = jet.length();
        int max_order = 0;
        for (int r = 0; r < jet_rows; ++r) max_order = std::max(max_order, conds[row + r].order);
        const int eval_order = max_order + (want_jacobian ? 1 : 0);
        const CVec2 z = embed(jet.point, cfg.tau);
        std::array<FunctionJet, 4> fj;
        if (i == 2) {
            const auto jets = basis_L2_jet(z, c_hat, cfg.tau, truncation, eval_order);
            for (int s = 0; s < 4; ++s) fj[s] = FunctionJet(jets[s]);
        } else {
            const Characteristic ch0 = Characteristic::zero();
            fj[0] = FunctionJet(theta_jet(ch0, z + c_hat, cfg.tau, truncation, eval_order));
        }
        for (int r = 0; r < jet_rows; ++r) {
            const Condition& cond = conds[row + r];
            for (int s = 0; s < cols; ++s) {
                sys.M(row + r, s) = cond.apply(fj[s]);
                if (want_jacobian) {
                    // d/d c_hat_l: one half of d/dz for the doubled argument, full d/dz for i=1
                    const double scale = (i == 2) ? 0.5 : 1.0;
                    sys.dM[0](row + r, s) = scale * cond.apply_dz(fj[s], 0);
                    sys.dM[1](row + r, s) = scale * cond.apply_dz(fj[s], 1);
                }
            }
        }
        row += jet_rows;
    }
    return sys;
}

/// Scale rows to unit norm; rows below the relative noise floor are kept
/// unscaled so that genuinely vanishing condition rows do not turn into noise.
inline Eigen::MatrixXcd normalize_rows(const Eigen::MatrixXcd& M) {
    Eigen::MatrixXcd out = M;
    double maxn = 0.0;
    for (int r = 0; r < M.rows(); ++r) maxn = std::max(maxn, M.row(r).norm());
    if (maxn == 0.0) return out;
    for (int r = 0; r < M.rows(); ++r) {
        const double n = M.row(r).norm();
        if (n > 1e-9 * maxn) out.row(r) /= n;
    }
    return out;
}

}  // namespace detail

struct RankInfo {
    int rank = 0;
    bool ambiguous = false;
    Eigen::VectorXd svals;
};

/// Numerical rank by singular values of the row-normalized matrix: values
/// above rel_tol * sigma_max count; anything within a factor 10 of the
/// threshold marks the call ambiguous.
inline RankInfo numerical_rank(const Eigen::MatrixXcd& M, double rel_tol) {
    RankInfo info;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(detail::normalize_rows(M));
    info.svals = svd.singularValues();
    if (info.svals.size() == 0) return info;
    const double smax = info.svals[0];
    if (smax == 0.0) return info;
    const double thr = rel_tol * smax;
    for (int k = 0; k < info.svals.size(); ++k) {
        if (info.svals[k] > thr) info.rank++;
        if (info.svals[k] > thr / 10.0 && info.svals[k] < thr * 10.0) info.ambiguous = true;
    }
    return info;
}

/// sigma_r / sigma_1 (1-based r) of the row-normalized matrix; the scan
/// quantity whose zeros locate rank drops below the generic rank r.
inline double rank_gap_ratio(const Eigen::MatrixXcd& M, int generic_rank) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(detail::normalize_rows(M));
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0.0;
    const int idx = std::min<int>(generic_rank, static_cast<int>(s.size())) - 1;
    if (idx < 0) return 1.0;
    return s[idx] / s[0];
}

/// The |X| x 4 determinantal matrix of the twisted order-2 system: row j is
/// condition j applied to z -> Theta_sigma(z + c/2), columns in sigma order.
/// Rows carry their split scale (a common nonzero factor per row).
inline Eigen::MatrixXcd eval_matrix(const ZeroScheme& X, const TwistParam& twist,
                                    const SurfaceConfig& cfg, int truncation_override = 0) {
    if (X.length() < 1) throw InputError("eval_matrix: scheme must be nonempty");
    const int trunc = truncation_override > 0 ? truncation_override : cfg.truncation_radius;
    return detail::eval_system(X, 2, embed(twist.c, cfg.tau), cfg, trunc, false).M;
}

/// The |X| x 1 column for the order-1 system (conditions on z -> theta(z + c)).
inline Eigen::MatrixXcd eval_matrix_i1(const ZeroScheme& X, const TwistParam& twist,
                                       const SurfaceConfig& cfg, int truncation_override = 0) {
    const int trunc = truncation_override > 0 ? truncation_override : cfg.truncation_radius;
    return detail::eval_system(X, 1, embed(twist.c, cfg.tau), cfg, trunc, false).M;
}

/// h^0(L^2 P I_X) = 4 - rank. Ambiguous rank calls retry at doubled
/// truncation before giving up.
inline int h0(const ZeroScheme& X, const TwistParam& twist, const SurfaceConfig& cfg) {
    if (X.length() > 8) throw InputError("h0: |X| <= 8 only");
    RankInfo info = numerical_rank(eval_matrix(X, twist, cfg), cfg.rank_tol);
    if (info.ambiguous) {
        info = numerical_rank(eval_matrix(X, twist, cfg, 2 * cfg.truncation_radius), cfg.rank_tol);
        if (info.ambiguous)
            throw RankAmbiguousError("h0: singular value within ambiguity band after refinement");
    }
    return 4 - info.rank;
}

/// h^0(L P I_X) = 1 - rank of the order-1 column.
inline int h0_i1(const ZeroScheme& X, const TwistParam& twist, const SurfaceConfig& cfg) {
    RankInfo info = numerical_rank(eval_matrix_i1(X, twist, cfg), cfg.rank_tol);
    if (info.ambiguous) {
        info = numerical_rank(eval_matrix_i1(X, twist, cfg, 2 * cfg.truncation_radius),
                              cfg.rank_tol);
        if (info.ambiguous)
            throw RankAmbiguousError("h0_i1: singular value within ambiguity band");
    }
    return 1 - info.rank;
}

namespace detail {

/// Seeds for a 2-complex-unknown solve: a coarse grid over the torus.
inline std::vector<CVecX> torus_grid_seeds(const PeriodMatrix& tau, int res) {
    std::vector<CVecX> seeds;
    seeds.reserve(static_cast<size_t>(res) * res * res * res);
    for (int a = 0; a < res; ++a)
        for (int b = 0; b < res; ++b)
            for (int c = 0; c < res; ++c)
                for (int d = 0; d < res; ++d) {
                    const TorusPoint pt((a + 0.5) / res, (b + 0.5) / res, (c + 0.5) / res,
                                        (d + 0.5) / res);
                    CVecX x(2);
                    const CVec2 z = embed(pt, tau);
                    x[0] = z[0];
                    x[1] = z[1];
                    seeds.push_back(x);
                }
    return seeds;
}

/// Rank the seeds by residual norm and keep the best `keep`.
inline std::vector<CVecX> best_seeds(const ResidualFn& F, std::vector<CVecX> seeds, int keep) {
    std::vector<std::pair<double, size_t>> score(seeds.size());
    CVecX r;
    for (size_t i = 0; i < seeds.size(); ++i) {
        F(seeds[i], r, nullptr);
        score[i] = {r.squaredNorm(), i};
    }
    std::sort(score.begin(), score.end());
    std::vector<CVecX> out;
    const size_t n = std::min<size_t>(keep, seeds.size());
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(seeds[score[i].second]);
    return out;
}

}  // namespace detail

/// All u with X contained in the translated theta divisor D_u, with
/// multiplicity 2 at rank-deficient (tangential) solutions.
inline std::vector<PointWithMult> lines_through(const ZeroScheme& X, const SurfaceConfig& cfg) {
    if (X.length() < 1) throw InputError("lines_through: scheme must be nonempty");
    const auto conds = conditions(X);
    const Characteristic ch0 = Characteristic::zero();
    const int rows = static_cast<int>(conds.size());
    // residuals: condition_j applied to z -> theta(z - u); holomorphic in u
    ResidualFn F = [&, rows](const CVecX& x, CVecX& r, CMatX* J) {
        r.resize(rows);
        if (J) J->resize(rows, 2);
        const CVec2 u(x[0], x[1]);
        for (int j = 0; j < rows; ++j) {
            const Condition& cond = conds[j];
            const CVec2 z = embed(cond.at, cfg.tau) - u;
            const FunctionJet fj(
                theta_jet(ch0, z, cfg.tau, cfg.truncation_radius, cond.order + (J ? 1 : 0)));
            r[j] = cond.apply(fj);
            if (J) {
                (*J)(j, 0) = -cond.apply_dz(fj, 0);
                (*J)(j, 1) = -cond.apply_dz(fj, 1);
            }
        }
    };
    auto seeds = detail::best_seeds(F, detail::torus_grid_seeds(cfg.tau, 7), 64);
    auto to_point = [&](const CVecX& x) {
        return torus_point_from_embedding(CVec2(x[0], x[1]), cfg.tau);
    };
    auto degenerate = [&](const CVecX& x) {
        CVecX r;
        CMatX J;
        F(x, r, &J);
        Eigen::JacobiSVD<CMatX> svd(J);
        const auto& s = svd.singularValues();
        return s[0] == 0.0 || s[s.size() - 1] / s[0] < 1e-4;
    };
    MultistartOptions opt;
    opt.dedup_radius = std::max(cfg.point_tol, 1e-4);
    return multistart_solve(F, seeds, cfg.tau, to_point, degenerate, opt);
}

/// Intersection points of D_u and D_v, total multiplicity 2.
inline std::vector<PointWithMult> line_intersection(const TorusPoint& u, const TorusPoint& v,
                                                    const SurfaceConfig& cfg) {
    if (torus_distance(u, v, cfg.tau) <= cfg.point_tol)
        throw CoincidentLinesError("line_intersection: u and v coincide");
    const Characteristic ch0 = Characteristic::zero();
    const CVec2 ue = embed(u, cfg.tau), ve = embed(v, cfg.tau);
    ResidualFn F = [&](const CVecX& x, CVecX& r, CMatX* J) {
        r.resize(2);
        if (J) J->resize(2, 2);
        const CVec2 z(x[0], x[1]);
        const ThetaJet a = theta_jet(ch0, z - ue, cfg.tau, cfg.truncation_radius, J ? 1 : 0);
        const ThetaJet b = theta_jet(ch0, z - ve, cfg.tau, cfg.truncation_radius, J ? 1 : 0);
        r[0] = a.v;
        r[1] = b.v;
        if (J) {
            (*J)(0, 0) = a.g[0];
            (*J)(0, 1) = a.g[1];
            (*J)(1, 0) = b.g[0];
            (*J)(1, 1) = b.g[1];
        }
    };
    auto seeds = detail::best_seeds(F, detail::torus_grid_seeds(cfg.tau, 7), 64);
    auto to_point = [&](const CVecX& x) {
        return torus_point_from_embedding(CVec2(x[0], x[1]), cfg.tau);
    };
    auto degenerate = [&](const CVecX& x) {
        CVecX r;
        CMatX J;
        F(x, r, &J);
        Eigen::JacobiSVD<CMatX> svd(J);
        const auto& s = svd.singularValues();
        return s[0] == 0.0 || s[1] / s[0] < 1e-4;
    };
    MultistartOptions opt;
    opt.dedup_radius = std::max(cfg.point_tol, 1e-4);
    return multistart_solve(F, seeds, cfg.tau, to_point, degenerate, opt);
}

/// Fiber of the Gauss map of D_p over the direction [t]: all u in D_p whose
/// translate D_u is tangent to t at p. Generic fibers have two simple points.
inline std::vector<PointWithMult> gauss_map_fiber(const TorusPoint& p, const CVec2& t_in,
                                                  const SurfaceConfig& cfg) {
    const double tn = t_in.norm();
    if (tn == 0.0) throw InputError("gauss_map_fiber: zero direction");
    const CVec2 t = t_in / tn;
    const Characteristic ch0 = Characteristic::zero();
    const CVec2 pe = embed(p, cfg.tau);
    ResidualFn F = [&](const CVecX& x, CVecX& r, CMatX* J) {
        r.resize(2);
        if (J) J->resize(2, 2);
        const CVec2 u(x[0], x[1]);
        const ThetaJet th = theta_jet(ch0, pe - u, cfg.tau, cfg.truncation_radius, J ? 2 : 1);
        r[0] = th.v;
        r[1] = th.g[0] * t[0] + th.g[1] * t[1];
        if (J) {
            (*J)(0, 0) = -th.g[0];
            (*J)(0, 1) = -th.g[1];
            (*J)(1, 0) = -(th.h(0, 0) * t[0] + th.h(0, 1) * t[1]);
            (*J)(1, 1) = -(th.h(1, 0) * t[0] + th.h(1, 1) * t[1]);
        }
    };
    auto seeds = detail::best_seeds(F, detail::torus_grid_seeds(cfg.tau, 7), 64);
    auto to_point = [&](const CVecX& x) {
        return torus_point_from_embedding(CVec2(x[0], x[1]), cfg.tau);
    };
    auto degenerate = [&](const CVecX& x) {
        CVecX r;
        CMatX J;
        F(x, r, &J);
        Eigen::JacobiSVD<CMatX> svd(J);
        const auto& s = svd.singularValues();
        return s[0] == 0.0 || s[1] / s[0] < 1e-4;
    };
    MultistartOptions opt;
    opt.dedup_radius = std::max(cfg.point_tol, 1e-4);
    return multistart_solve(F, seeds, cfg.tau, to_point, degenerate, opt);
}

/// Split jet of a section of the twisted order-2 system at z (shared
/// log factor across the four basis jets makes the combination valid).
inline FunctionJet section_jet(const SectionL2& s, const CVec2& z, const SurfaceConfig& cfg,
                               int order) {
    const auto jets = basis_L2_jet(z, embed(s.twist.c, cfg.tau), cfg.tau, cfg.truncation_radius,
                                   order);
    FunctionJet out;
    for (int k = 0; k < 4; ++k) {
        const cplx w = s.lambda[k];
        out.v += w * jets[k].v;
        out.g += w * jets[k].g;
        out.h += w * jets[k].h;
        for (int m = 0; m < 4; ++m) out.d3[m] += w * jets[k].d3[m];
    }
    return out;
}

/// Full (unsplit) value of a section at z.
inline cplx section_value(const SectionL2& s, const CVec2& z, const SurfaceConfig& cfg) {
    const auto jets = basis_L2_jet(z, embed(s.twist.c, cfg.tau), cfg.tau, cfg.truncation_radius,
                                   0);
    cplx v = 0.0;
    for (int k = 0; k < 4; ++k) v += s.lambda[k] * jets[k].v;
    return std::exp(jets[0].log_factor) * v;
}

/// All singular points of the divisor of s: common zeros of (s, ds), located
/// by grid-seeded Gauss-Newton on the overdetermined 3-equation system, then
/// classified through the restricted Hessian and the cubic term along its
/// kernel direction.
inline std::vector<SingularityReport> singular_points(const SectionL2& s,
                                                      const SurfaceConfig& cfg,
                                                      int seed_res = 10) {
    if (s.lambda.norm() == 0.0) throw InputError("singular_points: zero section");
    SectionL2 sec = s;
    sec.lambda /= sec.lambda.norm();
    ResidualFn F = [&](const CVecX& x, CVecX& r, CMatX* J) {
        r.resize(3);
        if (J) J->resize(3, 2);
        const CVec2 z(x[0], x[1]);
        const FunctionJet fj = section_jet(sec, z, cfg, J ? 2 : 1);
        r[0] = fj.v;
        r[1] = fj.g[0] / (2.0 * kPi);
        r[2] = fj.g[1] / (2.0 * kPi);
        if (J) {
            (*J)(0, 0) = fj.g[0];
            (*J)(0, 1) = fj.g[1];
            (*J)(1, 0) = fj.h(0, 0) / (2.0 * kPi);
            (*J)(1, 1) = fj.h(0, 1) / (2.0 * kPi);
            (*J)(2, 0) = fj.h(1, 0) / (2.0 * kPi);
            (*J)(2, 1) = fj.h(1, 1) / (2.0 * kPi);
        }
    };
    auto seeds = detail::best_seeds(F, detail::torus_grid_seeds(cfg.tau, seed_res), 150);
    auto to_point = [&](const CVecX& x) {
        return torus_point_from_embedding(CVec2(x[0], x[1]), cfg.tau);
    };
    MultistartOptions opt;
    opt.gn.accept_res2 = 1e-22;  // flat tangency directions converge slowly
    opt.gn.max_iters = 120;
    opt.dedup_radius = 1e-3;
    opt.plateau_high = 1e-12;
    auto sols = multistart_solve(F, seeds, cfg.tau, to_point, nullptr, opt);

    std::vector<SingularityReport> reports;
    for (const auto& sol : sols) {
        const CVec2 z = embed(sol.point, cfg.tau);
        const FunctionJet fj = section_jet(sec, z, cfg, 3);
        Eigen::JacobiSVD<CMat2> svd(fj.h, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        SingularityReport rep;
        rep.point = sol.point;
        rep.hessian_condition = sv[0] > 0.0 ? sv[1] / sv[0] : 0.0;
        const double hscale = 4.0 * kPi * kPi;  // natural Hessian magnitude for unit sections
        if (sv[0] < cfg.rank_tol * hscale) {
            rep.type = SingType::higher;
        } else if (rep.hessian_condition > cfg.rank_tol) {
            rep.type = SingType::node;
        } else {
            // kernel direction of the Hessian; probe the cubic coefficient
            const CVec2 kdir = svd.matrixV().col(1);
            cplx cubic = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                        cubic += kdir[i] * kdir[j] * kdir[k] * fj.d3[i + j + k];
            const double c3 = std::abs(cubic) / (6.0 * sv[0]);
            rep.type = (c3 < 1e-3) ? SingType::tacnode : SingType::higher;
        }
        reports.push_back(rep);
    }
    return reports;
}

/// A point on the theta divisor D_L, located by a 1-complex-variable Newton
/// solve along a random line through the torus.
inline TorusPoint point_on_theta_divisor(const SurfaceConfig& cfg, Rng& rng) {
    const Characteristic ch0 = Characteristic::zero();
    for (int attempt = 0; attempt < 64; ++attempt) {
        const CVec2 base = embed(rng.torus_point(), cfg.tau);
        const CVec2 dir = rng.direction();
        ResidualFn F = [&](const CVecX& x, CVecX& r, CMatX* J) {
            r.resize(1);
            if (J) J->resize(1, 1);
            const CVec2 z = base + x[0] * dir;
            const ThetaJet th = theta_jet(ch0, z, cfg.tau, cfg.truncation_radius, J ? 1 : 0);
            r[0] = th.v;
            if (J) (*J)(0, 0) = th.g[0] * dir[0] + th.g[1] * dir[1];
        };
        for (int k = 0; k < 8; ++k) {
            CVecX x0(1);
            x0[0] = cplx(rng.u01() - 0.5, rng.u01() - 0.5);
            GNOptions opt;
            opt.accept_res2 = 1e-20;
            const GNResult g = gauss_newton(F, x0, opt);
            if (g.converged)
                return torus_point_from_embedding(base + g.x[0] * dir, cfg.tau);
        }
    }
    throw NonConvergentError("point_on_theta_divisor: no zero found");
}

/// Fit the coefficients of the product section theta(z-a) theta(z-b) in the
/// twisted basis at twist c = -(a+b); validates the reducible-divisor span.
inline SectionL2 kummer_section(const TorusPoint& a, const TorusPoint& b,
                                const SurfaceConfig& cfg) {
    const TorusPoint c = -(a + b);
    // integer lattice adjustment from the coordinate reduction; its q-part
    // requires an exponential gauge on the product side
    const RVec2 n0 = c.q + a.q + b.q;  // entries are exact integers
    const Characteristic ch0 = Characteristic::zero();
    const CVec2 ae = embed(a, cfg.tau), be = embed(b, cfg.tau);
    const CVec2 ce = embed(c, cfg.tau);
    Rng rng(cfg.seed ^ 0x5bd1e995u);
    const int npts = 12;
    Eigen::MatrixXcd A(npts, 4);
    Eigen::VectorXcd y(npts);
    const cplx I(0.0, 1.0);
    for (int k = 0; k < npts; ++k) {
        const CVec2 z = embed(rng.torus_point(), cfg.tau);
        const auto jets = basis_L2_jet(z, ce, cfg.tau, cfg.truncation_radius, 0);
        const cplx pref = std::exp(jets[0].log_factor);
        for (int s = 0; s < 4; ++s) A(k, s) = pref * jets[s].v;
        const cplx f = theta(ch0, z - ae, cfg.tau, cfg.truncation_radius).value() *
                       theta(ch0, z - be, cfg.tau, cfg.truncation_radius).value();
        const cplx gauge = std::exp(-2.0 * kPi * I * (n0[0] * z[0] + n0[1] * z[1]));
        y[k] = f * gauge;
    }
    const Eigen::Vector4cd lam = A.completeOrthogonalDecomposition().solve(y);
    const double rel = (A * lam - y).norm() / y.norm();
    if (rel > 1e-8)
        throw NonConvergentError("kummer_section: basis fit residual " + std::to_string(rel));
    SectionL2 out;
    out.lambda = lam / lam.norm();
    out.twist = TwistParam{c};
    return out;
}

}  // namespace ppas
