#pragma once

// Exact integer bookkeeping for the Fourier transform of twisted ideal
// sheaves: Chern-character triples (r, c1 = k*l, chi) with l^2 = 2, the
// transform rule (r,c,chi) -> (chi,-c,r), and the classification of the
// jumping loci and transform sheaves by incidence profile, with the
// four-term exact-sequence balance check.

#include <string>
#include <vector>

#include "ppas/errors.hpp"

namespace ppas {

/// Chern character triple (rank, c1 coefficient of l, chi); chi equals ch_2
/// on an abelian surface.
struct MukaiVector {
    long r = 0;
    long c = 0;
    long chi = 0;

    bool operator==(const MukaiVector& o) const = default;
    MukaiVector operator+(const MukaiVector& o) const { return {r + o.r, c + o.c, chi + o.chi}; }
    MukaiVector operator-(const MukaiVector& o) const { return {r - o.r, c - o.c, chi - o.chi}; }
    MukaiVector operator-() const { return {-r, -c, -chi}; }
};

/// Transform rule on Chern characters: (r, c, chi) -> (chi, -c, r).
inline MukaiVector phi_ch(const MukaiVector& v) { return {v.chi, -v.c, v.r}; }

/// Chern character of the transform sheaf of a WIT_1 sheaf (the K-theory
/// image is concentrated in degree one, hence the sign).
inline MukaiVector wit1_transform_ch(const MukaiVector& v) { return -phi_ch(v); }

/// ch(L^i I_X) = (1, i, i^2 - n).
inline MukaiVector twisted_ideal_ch(int i, int n) {
    return {1, i, static_cast<long>(i) * i - n};
}

/// ch of the degree-zero transform of L^i (a rank i^2 bundle).
inline MukaiVector transform_of_power_ch(int i) { return phi_ch({1, i, static_cast<long>(i) * i}); }

/// ch(H_X) for the homogeneous transform of a length-n structure sheaf.
inline MukaiVector homogeneous_ch(int n) { return {n, 0, 0}; }

enum class LocusShape { empty, point_formula, point_set_formula, curve_formula };

inline const char* locus_shape_name(LocusShape s) {
    switch (s) {
        case LocusShape::empty: return "empty";
        case LocusShape::point_formula: return "point";
        case LocusShape::point_set_formula: return "point-set";
        case LocusShape::curve_formula: return "curve";
    }
    return "?";
}

/// Incidence vocabulary of the case analysis. Sub-flags describe proper
/// subschemes: has_collinear_len4 is meaningful for n >= 5,
/// has_collinear_colength1 for n >= 6, has_collinear_len3 counts the
/// collinear triples inside a non-collinear length-4 scheme.
struct IncidenceProfile {
    int i = 2;
    int n = 1;
    bool collinear = false;
    bool has_collinear_colength1 = false;
    bool has_collinear_len4 = false;
    int has_collinear_len3 = 0;  // 0, 1 or 2
    bool unique_len3_in_every_Z = false;
};

/// One classification row: locus shape with its witness formula, and the two
/// transform sheaves at Chern level with short structural descriptions.
struct ClassificationRow {
    LocusShape s_locus = LocusShape::empty;
    std::string s_formula;
    std::string r0_desc;
    MukaiVector r0_ch;
    std::string r1_desc;
    MukaiVector r1_ch;
    std::string note;
};

/// Sharp bound on the length of a finite order-2 locus for n >= 6.
inline int max_finite_s2_length(int n) { return n >= 7 ? 2 : 3; }

namespace detail {
inline void validate_profile(const IncidenceProfile& p) {
    if (p.i != 1 && p.i != 2) throw UnclassifiedProfileError("profile: i must be 1 or 2");
    if (p.n < 1 || p.n > 8) throw UnclassifiedProfileError("profile: n must lie in [1,8]");
    if (p.has_collinear_len3 < 0 || p.has_collinear_len3 > 2)
        throw UnclassifiedProfileError("profile: collinear-triple count must be 0, 1 or 2");
    if (p.has_collinear_len4 && p.n < 5)
        throw UnclassifiedProfileError(
            "profile: a proper collinear length-4 subscheme needs n >= 5");
    if (p.has_collinear_colength1 && p.n < 6)
        throw UnclassifiedProfileError(
            "profile: the collinear colength-1 flag applies to n >= 6 (use the length-4 flag "
            "at n = 5)");
    if (p.has_collinear_len3 > 0 && p.n != 4)
        throw UnclassifiedProfileError(
            "profile: the collinear-triple count applies to length-4 schemes");
    if (p.unique_len3_in_every_Z && p.n != 5)
        throw UnclassifiedProfileError(
            "profile: the unique-collinear-triple condition applies to n = 5");
    if (!p.collinear) {
        if (p.unique_len3_in_every_Z && p.has_collinear_len4)
            throw UnclassifiedProfileError(
                "profile: a collinear length-4 subscheme contains several collinear triples, "
                "contradicting uniqueness in every length-4 subscheme");
    }
}
}  // namespace detail

/// Total decision procedure over the tabulated profile space; combinations
/// excluded by the case analysis raise UnclassifiedProfile.
inline ClassificationRow classify(const IncidenceProfile& p) {
    detail::validate_profile(p);
    ClassificationRow row;
    const int n = p.n;
    const bool collinear = (n <= 2) ? true : p.collinear;

    if (p.i == 1) {
        row.r0_desc = "0";
        row.r0_ch = {0, 0, 0};
        if (n == 1) {
            row.s_locus = LocusShape::curve_formula;
            row.s_formula = "D_{-p}";
            row.r1_desc = "degree-0 line bundle P_p O_{D_{-p}} on a theta translate";
            row.r1_ch = {0, 1, -1};
        } else if (n == 2) {
            row.s_locus = LocusShape::point_set_formula;
            row.s_formula = "{l-p, -l'-p} with p-q = l-l', both on the theta divisor";
            row.r1_desc = "rank-1 twisted ideal sheaf of the two jump points";
            row.r1_ch = {1, 1, -1};
        } else if (collinear) {
            row.s_locus = LocusShape::point_formula;
            row.s_formula = "{-v} for the unique line D_v containing X";
            row.r1_desc = "torsion-free transform of the collinear scheme";
            row.r1_ch = {static_cast<long>(n) - 1, 1, -1};
        } else {
            row.s_locus = LocusShape::empty;
            row.s_formula = "empty";
            row.r1_desc = "mu-stable torsion-free transform";
            row.r1_ch = {static_cast<long>(n) - 1, 1, -1};
        }
        row.note = "order-1 twisted ideal sheaves of length >= 2 transform in degree one only";
        return row;
    }

    // i = 2
    switch (n) {
        case 1:
            row.s_locus = LocusShape::empty;
            row.s_formula = "empty";
            row.r0_desc = "rank-3 mu-stable vector bundle";
            row.r0_ch = {3, -2, 1};
            row.r1_desc = "0";
            row.r1_ch = {0, 0, 0};
            break;
        case 2:
            row.s_locus = LocusShape::point_formula;
            row.s_formula = "{-p-q}";
            row.r0_desc = "rank-2 mu-semistable bundle, homogeneous after one polarization twist";
            row.r0_ch = {2, -2, 2};
            row.r1_desc = "structure sheaf of the jump point";
            row.r1_ch = {0, 0, 1};
            break;
        case 3:
            if (collinear) {
                row.s_locus = LocusShape::curve_formula;
                row.s_formula = "D_{v - sum Y} for Y in D_v";
                row.r0_desc = "inverse dual polarization, twist -v";
                row.r0_ch = {1, -1, 1};
                row.r1_desc = "degree-1 rank-1 torsion-free sheaf on the jump curve";
                row.r1_ch = {0, 1, 0};
            } else {
                row.s_locus = LocusShape::point_set_formula;
                row.s_formula = "{-p-q, -q-y, -y-p}, the same configuration as Y";
                row.r0_desc = "inverse square of the dual polarization, twist -sum Y";
                row.r0_ch = {1, -2, 4};
                row.r1_desc = "structure sheaf of the three jump points";
                row.r1_ch = {0, 0, 3};
            }
            break;
        case 4:
            if (collinear) {
                row.s_locus = LocusShape::point_formula;
                row.s_formula = "{2v - sigma} with sigma = sum Z, Z in D_v";
                row.r0_desc = "inverse dual polarization, twist -v";
                row.r0_ch = {1, -1, 1};
                row.r1_desc = "dual polarization, twist sigma - v, ideal of 2v - sigma";
                row.r1_ch = {1, 1, 0};
            } else {
                row.s_locus = LocusShape::curve_formula;
                row.s_formula = "a divisor in the doubled dual system with parameter sigma = sum Z";
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc = "degree-3 rank-1 torsion-free sheaf on the jump divisor";
                row.r1_ch = {0, 2, -1};
                if (p.has_collinear_len3 == 1)
                    row.note =
                        "jump divisor reducible (one collinear triple); restriction type (2,1)";
                else if (p.has_collinear_len3 == 2)
                    row.note =
                        "jump divisor reducible (two collinear triples); restriction type (1,1)";
                else
                    row.note = "jump divisor irreducible: no collinear triple inside Z";
            }
            break;
        case 5:
            if (collinear) {
                row.s_locus = LocusShape::empty;
                row.s_formula = "empty";
                row.r0_desc = "inverse dual polarization, twist v";
                row.r0_ch = {1, -1, 1};
                row.r1_desc = "rank-2 mu-stable vector bundle";
                row.r1_ch = {2, 1, 0};
            } else if (p.has_collinear_len4) {
                row.s_locus = LocusShape::curve_formula;
                row.s_formula = "a theta translate (support of the degree-0 torsion part)";
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc =
                    "extension of a twisted dual-polarization ideal sheaf by degree-0 torsion "
                    "on a theta translate";
                row.r1_ch = {1, 2, -1};
            } else if (p.unique_len3_in_every_Z) {
                row.s_locus = LocusShape::curve_formula;
                row.s_formula = "a theta translate (support of the degree -1 torsion part)";
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc =
                    "extension of a twisted dual polarization by degree -1 torsion on a theta "
                    "translate";
                row.r1_ch = {1, 2, -1};
            } else {
                row.s_locus = LocusShape::point_set_formula;
                row.s_formula = "five points W' of the dual torus";
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc = "doubled dual polarization twisted by the ideal of W'";
                row.r1_ch = {1, 2, -1};
            }
            break;
        default:  // 6 <= n <= 8
            if (collinear) {
                row.s_locus = LocusShape::empty;
                row.s_formula = "empty";
                row.r0_desc = "inverse dual polarization, twist v";
                row.r0_ch = {1, -1, 1};
                row.r1_desc = "mu-stable locally free transform";
                row.r1_ch = {static_cast<long>(n) - 3, 1, 0};
            } else if (p.has_collinear_colength1) {
                row.s_locus = LocusShape::curve_formula;
                row.s_formula = "a theta translate (support of the degree-0 torsion part)";
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc = "extension of a locally free sheaf by degree-0 torsion on a "
                              "theta translate";
                row.r1_ch = {static_cast<long>(n) - 4, 2, -1};
            } else {
                row.s_locus = LocusShape::point_set_formula;
                row.s_formula = std::string("finite, length at most ") +
                                std::to_string(max_finite_s2_length(n));
                row.r0_desc = "0";
                row.r0_ch = {0, 0, 0};
                row.r1_desc = "torsion-free transform with singularity set equal to the locus "
                              "(locally free when the locus is empty)";
                row.r1_ch = {static_cast<long>(n) - 4, 2, -1};
            }
            break;
    }
    return row;
}

/// Chern balance of the four-term transform sequence:
/// ch(R0) - ch(transform of L^i) + ch(H_X) - ch(R1) = 0.
inline bool balance_check(const ClassificationRow& row, int n, int i) {
    const MukaiVector lhs = row.r0_ch - transform_of_power_ch(i) + homogeneous_ch(n) - row.r1_ch;
    return lhs == MukaiVector{0, 0, 0};
}

/// Every valid profile in tabulated order (the executable appendix).
inline std::vector<IncidenceProfile> decision_table_profiles() {
    std::vector<IncidenceProfile> out;
    for (int i = 1; i <= 2; ++i) {
        for (int n = 1; n <= 8; ++n) {
            if (n <= 2) {
                out.push_back({i, n, n <= 2, false, false, 0, false});
                continue;
            }
            if (i == 1) {
                out.push_back({i, n, false, false, false, 0, false});
                out.push_back({i, n, true, false, false, 0, false});
                continue;
            }
            switch (n) {
                case 3:
                    out.push_back({i, n, false, false, false, 0, false});
                    out.push_back({i, n, true, false, false, 0, false});
                    break;
                case 4:
                    for (int k = 0; k <= 2; ++k)
                        out.push_back({i, n, false, false, false, k, false});
                    out.push_back({i, n, true, false, false, 0, false});
                    break;
                case 5:
                    out.push_back({i, n, false, false, false, 0, false});
                    out.push_back({i, n, false, false, true, 0, false});
                    out.push_back({i, n, false, false, false, 0, true});
                    out.push_back({i, n, true, false, false, 0, false});
                    break;
                default:
                    out.push_back({i, n, false, false, false, 0, false});
                    out.push_back({i, n, false, true, false, 0, false});
                    out.push_back({i, n, true, false, false, 0, false});
                    break;
            }
        }
    }
    return out;
}

}  // namespace ppas
