#pragma once

// Damped complex Gauss-Newton for holomorphic residual systems, plus a
// multistart driver with torus-aware deduplication. Residual providers return
// rows in split scale (quasi-periodicity prefactors removed per row), which
// leaves zero sets and Newton directions unchanged while keeping entries O(1).

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ppas/errors.hpp"
#include "ppas/surface.hpp"

namespace ppas {

using CVecX = Eigen::VectorXcd;
using CMatX = Eigen::MatrixXcd;

/// Residual provider: fills r (and J when requested) at x.
using ResidualFn = std::function<void(const CVecX& x, CVecX& r, CMatX* J)>;

struct GNOptions {
    int max_iters = 80;
    double accept_res2 = 1e-18;  // squared residual norm for convergence
    double step_floor = 1e-14;   // give up when damped steps stall
};

struct GNResult {
    CVecX x;
    double res2 = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iters = 0;
};

/// Least-squares Gauss-Newton with step halving; uses a complete orthogonal
/// decomposition so underdetermined (curve-following) systems take the
/// minimum-norm step.
inline GNResult gauss_newton(const ResidualFn& F, const CVecX& x0, const GNOptions& opt = {}) {
    GNResult res;
    res.x = x0;
    CVecX r;
    CMatX J;
    F(res.x, r, &J);
    res.res2 = r.squaredNorm();
    for (res.iters = 0; res.iters < opt.max_iters; ++res.iters) {
        if (res.res2 < opt.accept_res2) {
            res.converged = true;
            return res;
        }
        Eigen::CompleteOrthogonalDecomposition<CMatX> cod(J);
        const CVecX step = cod.solve(-r);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        bool improved = false;
        for (int halve = 0; halve < 30; ++halve) {
            const CVecX xt = res.x + alpha * step;
            CVecX rt;
            F(xt, rt, nullptr);
            const double rt2 = rt.squaredNorm();
            if (rt2 < res.res2) {
                res.x = xt;
                res.res2 = rt2;
                improved = true;
                break;
            }
            alpha *= 0.5;
            if ((alpha * step.norm()) < opt.step_floor) break;
        }
        if (!improved) break;
        F(res.x, r, &J);
        res.res2 = r.squaredNorm();
    }
    res.converged = res.res2 < opt.accept_res2;
    return res;
}

/// A solution of a point-location problem on the torus.
struct PointWithMult {
    TorusPoint point;
    int multiplicity = 1;
    double residual2 = 0.0;
};

struct MultistartOptions {
    GNOptions gn;
    double dedup_radius = 1e-4;
    double plateau_low = 1e-18;  // squared-residual band flagged as ambiguous
    double plateau_high = 1e-8;
    bool throw_on_plateau = true;
};

/// Runs Gauss-Newton from each seed, keeps converged solutions, deduplicates
/// on the torus and reports multiplicity through the caller's Jacobian test.
/// `to_point` maps solver coordinates to a torus point; `is_degenerate`
/// decides multiplicity 2 at a converged solution.
inline std::vector<PointWithMult> multistart_solve(
    const ResidualFn& F, const std::vector<CVecX>& seeds, const PeriodMatrix& tau,
    const std::function<TorusPoint(const CVecX&)>& to_point,
    const std::function<bool(const CVecX&)>& is_degenerate, const MultistartOptions& opt = {}) {
    struct Hit {
        TorusPoint pt;
        CVecX x;
        double res2;
    };
    std::vector<Hit> hits;
    std::vector<TorusPoint> plateaus;
    for (const auto& s : seeds) {
        GNResult g = gauss_newton(F, s, opt.gn);
        if (g.converged) {
            hits.push_back({to_point(g.x), g.x, g.res2});
        } else if (g.res2 > opt.plateau_low && g.res2 < opt.plateau_high) {
            plateaus.push_back(to_point(g.x));
        }
    }
    std::vector<PointWithMult> out;
    std::vector<CVecX> reps;
    for (const auto& h : hits) {
        bool merged = false;
        for (size_t i = 0; i < out.size(); ++i) {
            if (torus_distance(out[i].point, h.pt, tau) < opt.dedup_radius) {
                if (h.res2 < out[i].residual2) {
                    out[i].point = h.pt;
                    out[i].residual2 = h.res2;
                    reps[i] = h.x;
                }
                merged = true;
                break;
            }
        }
        if (!merged) {
            out.push_back(PointWithMult{h.pt, 1, h.res2});
            reps.push_back(h.x);
        }
    }
    for (size_t i = 0; i < out.size(); ++i)
        if (is_degenerate && is_degenerate(reps[i])) out[i].multiplicity = 2;
    if (opt.throw_on_plateau) {
        for (const auto& p : plateaus) {
            bool near_accepted = false;
            for (const auto& s : out)
                if (torus_distance(s.point, p, tau) < 10.0 * opt.dedup_radius) {
                    near_accepted = true;
                    break;
                }
            if (!near_accepted)
                throw NonConvergentError(
                    "multistart: residual plateau between tolerances away from any solution");
        }
    }
    std::sort(out.begin(), out.end(), [](const PointWithMult& a, const PointWithMult& b) {
        return a.point < b.point;
    });
    return out;
}

}  // namespace ppas
