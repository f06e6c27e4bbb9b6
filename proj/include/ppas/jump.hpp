#pragma once

// Jumping loci S_1(X), S_2(X) in the (identified) dual torus: coarse grid
// scan of the relative rank-gap singular value, bordered Gauss-Newton
// refinement of rank-drop points, antipodal-probe curve detection with
// predictor-corrector tracing, and the calibration that pins the reported
// dual coordinates to the length-2 normalization S_2({p,q}) = {-p-q}.

#include <algorithm>
#include <optional>
#include <vector>

#include "ppas/errors.hpp"
#include "ppas/linsys.hpp"
#include "ppas/schemes.hpp"
#include "ppas/solve.hpp"
#include "ppas/surface.hpp"

namespace ppas {

enum class LocusKind { empty, finite, curve, curve_plus_points };

inline const char* locus_kind_name(LocusKind k) {
    switch (k) {
        case LocusKind::empty: return "empty";
        case LocusKind::finite: return "finite";
        case LocusKind::curve: return "curve";
        case LocusKind::curve_plus_points: return "curve_plus_points";
    }
    return "?";
}

struct JumpPoint {
    TorusPoint c;
    int height = 1;
};

struct JumpLocus {
    LocusKind kind = LocusKind::empty;
    std::vector<JumpPoint> points;
    std::vector<TorusPoint> curve_samples;
    std::optional<TorusPoint> curve_witness;
};

/// Normalization of reported dual coordinates, fixed once per configuration.
struct Calibration {
    int sign = 1;
    TorusPoint offset;

    static Calibration identity() { return Calibration{}; }

    TorusPoint apply(const TorusPoint& c) const {
        return (sign >= 0 ? c : -c) + offset;
    }
};

struct JumpOptions {
    bool discover = true;                 // run the coarse grid scan
    int grid_res = 12;
    double seed_threshold = 1e-2;
    int extra_seeds = 48;                 // best local minima kept regardless of threshold
    int max_seeds = 160;
    double accept_s = 1e-8;               // rank-gap ratio accepted as a jump
    double confirm_s = 1e-6;              // membership threshold in confirm mode
    std::vector<TorusPoint> candidates;   // confirm-mode inputs (raw engine coordinates)
    bool probe_curves = true;
    bool trace_from_candidates = false;
    int trace_target_samples = 48;
    int trace_max_steps = 1200;
    double trace_step = 0.015;
    int trunc_bump = 4;                   // refined-truncation recheck
    int max_curve_components = 3;
};

namespace detail {

inline int columns_for(int i) { return i == 2 ? 4 : 1; }

/// Generic rank of the evaluation system, taken as the maximum over a few
/// seeded random twists (jumps only ever lower the rank).
inline int generic_rank(const ZeroScheme& X, int i, const SurfaceConfig& cfg) {
    Rng rng(cfg.seed ^ 0xa5a5a5a5ull);
    int best = 0;
    for (int k = 0; k < 8; ++k) {
        const TwistParam tw{rng.torus_point()};
        const Eigen::MatrixXcd M =
            (i == 2) ? eval_matrix(X, tw, cfg) : eval_matrix_i1(X, tw, cfg);
        const RankInfo info = numerical_rank(M, cfg.rank_tol);
        best = std::max(best, info.rank);
    }
    return best;
}

inline double s_at(const ZeroScheme& X, int i, const TorusPoint& c, const SurfaceConfig& cfg,
                   int r0, int trunc = 0) {
    const TwistParam tw{c};
    const Eigen::MatrixXcd M =
        (i == 2) ? eval_matrix(X, tw, cfg, trunc) : eval_matrix_i1(X, tw, cfg, trunc);
    return rank_gap_ratio(M, r0);
}

/// Bordered rank-drop system: unknowns x = [c_hat; vec(V)], residuals
/// [M(c_hat) V ; A^H V - I_k], holomorphic in all unknowns.
struct BorderedSystem {
    const ZeroScheme* X;
    int i;
    const SurfaceConfig* cfg;
    int trunc;
    Eigen::MatrixXcd A;  // cols x k
    int rows, cols, k;
    std::optional<std::pair<CVec2, CVec2>> pin;  // (covector w, target): w^T (c - target) = 0

    int nres() const { return rows * k + k * k + (pin ? 1 : 0); }
    int nvar() const { return 2 + cols * k; }

    void operator()(const CVecX& x, CVecX& r, CMatX* J) const {
        const CVec2 chat(x[0], x[1]);
        Eigen::MatrixXcd V(cols, k);
        for (int j = 0; j < k; ++j)
            for (int s = 0; s < cols; ++s) V(s, j) = x[2 + j * cols + s];
        const auto sys = eval_system(*X, i, chat, *cfg, trunc, J != nullptr);
        r.resize(nres());
        if (J) {
            J->resize(nres(), nvar());
            J->setZero();
        }
        int idx = 0;
        for (int j = 0; j < k; ++j)
            for (int row = 0; row < rows; ++row, ++idx) {
                r[idx] = sys.M.row(row) * V.col(j);
                if (J) {
                    (*J)(idx, 0) = sys.dM[0].row(row) * V.col(j);
                    (*J)(idx, 1) = sys.dM[1].row(row) * V.col(j);
                    for (int s = 0; s < cols; ++s) (*J)(idx, 2 + j * cols + s) = sys.M(row, s);
                }
            }
        for (int j = 0; j < k; ++j)
            for (int a = 0; a < k; ++a, ++idx) {
                cplx acc = 0.0;
                for (int s = 0; s < cols; ++s) acc += std::conj(A(s, a)) * V(s, j);
                r[idx] = acc - ((a == j) ? 1.0 : 0.0);
                if (J)
                    for (int s = 0; s < cols; ++s)
                        (*J)(idx, 2 + j * cols + s) = std::conj(A(s, a));
            }
        if (pin) {
            const CVec2& w = pin->first;
            const CVec2& tgt = pin->second;
            r[idx] = w[0] * (chat[0] - tgt[0]) + w[1] * (chat[1] - tgt[1]);
            if (J) {
                (*J)(idx, 0) = w[0];
                (*J)(idx, 1) = w[1];
            }
        }
    }
};

struct RefineOutcome {
    bool ok = false;
    TorusPoint c;
    CVecX x;  // converged bordered unknowns
    BorderedSystem sys;
};

/// Initialize the bordered system from the SVD at a seed twist and run
/// Gauss-Newton; verifies the rank gap at base and refined truncation.
inline RefineOutcome refine_jump_point(const ZeroScheme& X, int i, const SurfaceConfig& cfg,
                                       int r0, const TorusPoint& seed, const JumpOptions& opt) {
    RefineOutcome out;
    const int cols = columns_for(i);
    const int k = cols - r0 + 1;  // target nullity
    if (k < 1 || k > cols) return out;
    const TwistParam tw{seed};
    const Eigen::MatrixXcd M0 =
        (i == 2) ? eval_matrix(X, tw, cfg) : eval_matrix_i1(X, tw, cfg);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(normalize_rows(M0), Eigen::ComputeFullV);
    BorderedSystem sys;
    sys.X = &X;
    sys.i = i;
    sys.cfg = &cfg;
    sys.trunc = cfg.truncation_radius;
    sys.rows = X.length();
    sys.cols = cols;
    sys.k = k;
    sys.A = svd.matrixV().rightCols(k);
    CVecX x0(sys.nvar());
    const CVec2 ce = embed(seed, cfg.tau);
    x0[0] = ce[0];
    x0[1] = ce[1];
    for (int j = 0; j < k; ++j)
        for (int s = 0; s < cols; ++s) x0[2 + j * cols + s] = sys.A(s, j);
    GNOptions gopt;
    gopt.accept_res2 = 1e-20;
    gopt.max_iters = 60;
    auto fn = [&sys](const CVecX& x, CVecX& r, CMatX* J) { sys(x, r, J); };
    const GNResult g = gauss_newton(fn, x0, gopt);
    if (!g.converged) return out;
    const TorusPoint c = torus_point_from_embedding(CVec2(g.x[0], g.x[1]), cfg.tau);
    if (s_at(X, i, c, cfg, r0) > opt.accept_s) return out;
    if (s_at(X, i, c, cfg, r0, cfg.truncation_radius + opt.trunc_bump) > 10.0 * opt.accept_s)
        return out;
    out.ok = true;
    out.c = c;
    out.x = g.x;
    out.sys = sys;
    return out;
}

/// Tangent of the rank-drop variety at a converged bordered solution: the
/// c-part of a right null vector of the Jacobian, when one exists.
inline std::optional<CVecX> null_tangent(const BorderedSystem& sys, const CVecX& x) {
    CVecX r;
    CMatX J;
    sys(x, r, &J);
    Eigen::JacobiSVD<CMatX> svd(J, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const int n = static_cast<int>(s.size());
    for (int idx = n - 1; idx >= 0; --idx) {
        if (s[idx] > 1e-5 * s[0]) break;
        CVecX v = svd.matrixV().col(idx);
        const double cnorm = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
        if (cnorm > 0.3) return v / cnorm;
    }
    return std::nullopt;
}

/// Corrector step: solve the bordered system with the transversality pin
/// w = conj(tangent_c) at the given target.
inline RefineOutcome corrector(const BorderedSystem& base, const CVecX& x_start,
                               const CVec2& tangent_c, const CVec2& target, int r0,
                               const JumpOptions& opt) {
    RefineOutcome out;
    BorderedSystem sys = base;
    sys.pin = std::make_pair(CVec2(std::conj(tangent_c[0]), std::conj(tangent_c[1])), target);
    GNOptions gopt;
    gopt.accept_res2 = 1e-20;
    gopt.max_iters = 40;
    auto fn = [&sys](const CVecX& x, CVecX& r, CMatX* J) { sys(x, r, J); };
    const GNResult g = gauss_newton(fn, x_start, gopt);
    if (!g.converged) return out;
    const TorusPoint c = torus_point_from_embedding(CVec2(g.x[0], g.x[1]), sys.cfg->tau);
    if (s_at(*sys.X, sys.i, c, *sys.cfg, r0) > opt.accept_s) return out;
    out.ok = true;
    out.c = c;
    out.x = g.x;
    out.sys = base;
    return out;
}

struct TraceResult {
    std::vector<TorusPoint> samples;
    bool completed = false;
};

/// Predictor-corrector trace along the rank-drop curve through a refined
/// point. Samples are confirmed at refined truncation as they are collected.
inline TraceResult trace_curve(const RefineOutcome& start, int r0, const SurfaceConfig& cfg,
                               const JumpOptions& opt) {
    TraceResult res;
    auto tan0 = null_tangent(start.sys, start.x);
    if (!tan0) return res;
    CVecX x = start.x;
    CVecX tangent = *tan0;
    const TorusPoint first = start.c;
    res.samples.push_back(first);
    double h = opt.trace_step;
    int steps = 0;
    while (static_cast<int>(res.samples.size()) < opt.trace_target_samples &&
           steps < opt.trace_max_steps) {
        ++steps;
        const CVecX x_pred = x + h * tangent;
        const CVec2 target(x_pred[0], x_pred[1]);
        const CVec2 tc(tangent[0], tangent[1]);
        const RefineOutcome step = corrector(start.sys, x_pred, tc, target, r0, opt);
        if (!step.ok) {
            h *= 0.5;
            if (h < 1e-4) break;
            continue;
        }
        // refined-truncation confirmation of every accepted sample
        if (s_at(*start.sys.X, start.sys.i, step.c, cfg, r0,
                 cfg.truncation_radius + opt.trunc_bump) > 10.0 * opt.accept_s)
            break;
        res.samples.push_back(step.c);
        x = step.x;
        auto tnew = null_tangent(start.sys, x);
        if (!tnew) break;
        // keep the continuation direction consistent
        cplx ip = 0.0;
        for (int m = 0; m < tnew->size() && m < tangent.size(); ++m)
            ip += std::conj((*tnew)[m]) * tangent[m];
        const double a = std::abs(ip);
        *tnew *= (a > 0 ? ip / a : cplx(1, 0));
        tangent = *tnew;
        if (h < opt.trace_step) h = std::min(opt.trace_step, h * 1.5);
        if (res.samples.size() > 12 &&
            torus_distance(res.samples.back(), first, cfg.tau) < 0.6 * opt.trace_step) {
            res.completed = true;
            break;
        }
    }
    if (static_cast<int>(res.samples.size()) >= 32) res.completed = true;
    return res;
}

/// Fit a translate parameter beta with samples contained in beta + D_L.
inline std::optional<TorusPoint> fit_curve_witness(const std::vector<TorusPoint>& samples,
                                                   const SurfaceConfig& cfg) {
    if (samples.size() < 4) return std::nullopt;
    const size_t use = std::min<size_t>(samples.size(), 12);
    std::vector<CVec2> pts;
    const size_t stride = std::max<size_t>(1, samples.size() / use);
    for (size_t idx = 0; idx < samples.size() && pts.size() < use; idx += stride)
        pts.push_back(embed(samples[idx], cfg.tau));
    const Characteristic ch0 = Characteristic::zero();
    ResidualFn F = [&](const CVecX& x, CVecX& r, CMatX* J) {
        const int n = static_cast<int>(pts.size());
        r.resize(n);
        if (J) J->resize(n, 2);
        const CVec2 beta(x[0], x[1]);
        for (int j = 0; j < n; ++j) {
            const ThetaJet th =
                theta_jet(ch0, pts[j] - beta, cfg.tau, cfg.truncation_radius, J ? 1 : 0);
            r[j] = th.v;
            if (J) {
                (*J)(j, 0) = -th.g[0];
                (*J)(j, 1) = -th.g[1];
            }
        }
    };
    Rng rng(cfg.seed ^ 0xd1f2c3b4ull);
    GNOptions gopt;
    gopt.accept_res2 = 1e-16;
    double best = std::numeric_limits<double>::infinity();
    std::optional<TorusPoint> witness;
    for (int attempt = 0; attempt < 24; ++attempt) {
        const TorusPoint l = point_on_theta_divisor(cfg, rng);
        CVecX x0(2);
        const CVec2 b0 = pts[0] - embed(l, cfg.tau);
        x0[0] = b0[0];
        x0[1] = b0[1];
        const GNResult g = gauss_newton(F, x0, gopt);
        if (g.converged && g.res2 < best) {
            best = g.res2;
            witness = torus_point_from_embedding(CVec2(g.x[0], g.x[1]), cfg.tau);
        }
        if (best < 1e-18) break;
    }
    return witness;
}

}  // namespace detail

/// Compute the jumping locus of L^i I_X over the dual torus. Reported
/// coordinates are calibrated for i = 2 (the engine-raw coordinate already
/// matches the order-1 duality, so i = 1 reports raw coordinates).
inline JumpLocus jump_locus(const ZeroScheme& X, int i, const SurfaceConfig& cfg,
                            const Calibration& cal, const JumpOptions& opt = {}) {
    if (i != 1 && i != 2) throw InputError("jump_locus: i must be 1 or 2");
    if (X.length() < 1) throw InputError("jump_locus: scheme must be nonempty");
    if (opt.grid_res < 2 || opt.grid_res > 40)
        throw BudgetExhaustedError("jump_locus: grid resolution outside supported budget");
    const int r0 = detail::generic_rank(X, i, cfg);
    const int cols = detail::columns_for(i);

    // seed collection: coarse grid local minima and/or supplied candidates
    std::vector<TorusPoint> seeds;
    if (opt.discover) {
        const int R = opt.grid_res;
        std::vector<double> sval(static_cast<size_t>(R) * R * R * R);
        auto at = [&](int a, int b, int c, int d) -> double& {
            return sval[((static_cast<size_t>(a) * R + b) * R + c) * R + d];
        };
        for (int a = 0; a < R; ++a)
            for (int b = 0; b < R; ++b)
                for (int c = 0; c < R; ++c)
                    for (int d = 0; d < R; ++d)
                        at(a, b, c, d) = detail::s_at(
                            X, i, TorusPoint(double(a) / R, double(b) / R, double(c) / R,
                                             double(d) / R),
                            cfg, r0);
        std::vector<std::pair<double, TorusPoint>> minima;
        auto wrap = [R](int v) { return (v + R) % R; };
        for (int a = 0; a < R; ++a)
            for (int b = 0; b < R; ++b)
                for (int c = 0; c < R; ++c)
                    for (int d = 0; d < R; ++d) {
                        const double v = at(a, b, c, d);
                        if (v > at(wrap(a - 1), b, c, d) || v > at(wrap(a + 1), b, c, d) ||
                            v > at(a, wrap(b - 1), c, d) || v > at(a, wrap(b + 1), c, d) ||
                            v > at(a, b, wrap(c - 1), d) || v > at(a, b, wrap(c + 1), d) ||
                            v > at(a, b, c, wrap(d - 1)) || v > at(a, b, c, wrap(d + 1)))
                            continue;
                        minima.emplace_back(v, TorusPoint(double(a) / R, double(b) / R,
                                                          double(c) / R, double(d) / R));
                    }
        std::sort(minima.begin(), minima.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        for (size_t m = 0; m < minima.size(); ++m) {
            if (static_cast<int>(seeds.size()) >= opt.max_seeds) break;
            if (minima[m].first < opt.seed_threshold ||
                static_cast<int>(m) < opt.extra_seeds)
                seeds.push_back(minima[m].second);
        }
    }
    for (const auto& c : opt.candidates) seeds.push_back(c);

    // refinement
    std::vector<detail::RefineOutcome> accepted;
    std::vector<TorusPoint> confirmed_only;
    for (const auto& seed : seeds) {
        if (!opt.discover && !opt.trace_from_candidates) {
            // confirm mode: membership test at the candidate itself
            if (detail::s_at(X, i, seed, cfg, r0) < opt.confirm_s) confirmed_only.push_back(seed);
            continue;
        }
        auto out = detail::refine_jump_point(X, i, cfg, r0, seed, opt);
        if (!out.ok) continue;
        bool dup = false;
        for (const auto& acc : accepted)
            if (torus_distance(acc.c, out.c, cfg.tau) < std::max(cfg.point_tol, 1e-6)) {
                dup = true;
                break;
            }
        if (!dup) accepted.push_back(std::move(out));
    }

    JumpLocus locus;
    const int generic_h0 = cols - r0;
    auto height_at = [&](const TorusPoint& c) {
        const TwistParam tw{c};
        const int h = (i == 2) ? h0(X, tw, cfg) : h0_i1(X, tw, cfg);
        return std::max(1, h - generic_h0);
    };
    auto report_coord = [&](const TorusPoint& c) { return (i == 2) ? cal.apply(c) : c; };

    // curve detection and tracing
    std::vector<TorusPoint> curve_samples;
    std::optional<TorusPoint> witness;
    std::vector<bool> on_curve(accepted.size(), false);
    if (opt.probe_curves) {
        int components = 0;
        std::sort(accepted.begin(), accepted.end(),
                  [](const detail::RefineOutcome& a, const detail::RefineOutcome& b) {
                      return a.c < b.c;
                  });
        for (size_t idx = 0; idx < accepted.size(); ++idx) {
            // skip points already absorbed into a traced component
            bool masked = false;
            for (const auto& cs : curve_samples)
                if (torus_distance(cs, accepted[idx].c, cfg.tau) < 2.5 * opt.trace_step) {
                    masked = true;
                    break;
                }
            if (masked) {
                on_curve[idx] = true;
                continue;
            }
            if (components >= opt.max_curve_components) continue;
            auto tangent = detail::null_tangent(accepted[idx].sys, accepted[idx].x);
            if (!tangent) continue;
            const CVec2 tc((*tangent)[0], (*tangent)[1]);
            bool both_sides = true;
            for (int side = -1; side <= 1; side += 2) {
                CVecX xp = accepted[idx].x + (side * 1e-3) * (*tangent);
                const CVec2 target(xp[0], xp[1]);
                auto probe = detail::corrector(accepted[idx].sys, xp, tc, target, r0, opt);
                if (!probe.ok ||
                    torus_distance(probe.c, accepted[idx].c, cfg.tau) < 0.4e-3) {
                    both_sides = false;
                    break;
                }
            }
            if (!both_sides) continue;
            const auto traced = detail::trace_curve(accepted[idx], r0, cfg, opt);
            if (static_cast<int>(traced.samples.size()) >= 32) {
                ++components;
                on_curve[idx] = true;
                curve_samples.insert(curve_samples.end(), traced.samples.begin(),
                                     traced.samples.end());
                if (!witness) witness = detail::fit_curve_witness(traced.samples, cfg);
            }
        }
    }

    for (size_t idx = 0; idx < accepted.size(); ++idx) {
        if (on_curve[idx]) continue;
        bool masked = false;
        for (const auto& cs : curve_samples)
            if (torus_distance(cs, accepted[idx].c, cfg.tau) < 2.5 * opt.trace_step) {
                masked = true;
                break;
            }
        if (masked) continue;
        locus.points.push_back(JumpPoint{report_coord(accepted[idx].c),
                                         height_at(accepted[idx].c)});
    }
    for (const auto& c : confirmed_only)
        locus.points.push_back(JumpPoint{report_coord(c), height_at(c)});
    std::sort(locus.points.begin(), locus.points.end(),
              [](const JumpPoint& a, const JumpPoint& b) { return a.c < b.c; });

    for (const auto& cs : curve_samples) locus.curve_samples.push_back(report_coord(cs));
    if (witness) locus.curve_witness = report_coord(*witness);

    const bool has_curve = !locus.curve_samples.empty();
    const bool has_points = !locus.points.empty();
    if (has_curve && has_points)
        locus.kind = LocusKind::curve_plus_points;
    else if (has_curve)
        locus.kind = LocusKind::curve;
    else if (has_points)
        locus.kind = LocusKind::finite;
    else
        locus.kind = LocusKind::empty;
    return locus;
}

/// Fix the sign and offset of the reported dual coordinate so that a random
/// reduced pair {p,q} has its unique order-2 jump at -(p+q). Three
/// independent samples must agree to point_tol.
inline Calibration calibrate(const SurfaceConfig& cfg) {
    Rng rng(cfg.seed ^ 0xca11b7a7ull);
    std::vector<TorusPoint> cstar, target;
    for (int k = 0; k < 3; ++k) {
        TorusPoint p = rng.torus_point(), q = rng.torus_point();
        while (torus_distance(p, q, cfg.tau) < 0.1) q = rng.torus_point();
        const ZeroScheme Q = make_reduced_scheme({p, q}, cfg.tau, cfg.point_tol);
        JumpOptions opt;
        const JumpLocus locus = jump_locus(Q, 2, cfg, Calibration::identity(), opt);
        if (locus.kind != LocusKind::finite || locus.points.size() != 1)
            throw CalibrationInconsistentError(
                "calibrate: length-2 scheme did not produce a single jump point");
        cstar.push_back(locus.points[0].c);
        target.push_back(-(p + q));
    }
    const double tol = 50.0 * cfg.point_tol;
    for (int sign = 1; sign >= -1; sign -= 2) {
        std::vector<TorusPoint> offsets;
        for (int k = 0; k < 3; ++k)
            offsets.push_back(sign > 0 ? target[k] - cstar[k] : target[k] + cstar[k]);
        if (torus_distance(offsets[0], offsets[1], cfg.tau) < tol &&
            torus_distance(offsets[0], offsets[2], cfg.tau) < tol)
            return Calibration{sign, offsets[0]};
    }
    throw CalibrationInconsistentError("calibrate: samples do not admit a common sign/offset");
}

}  // namespace ppas
