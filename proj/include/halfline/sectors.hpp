#pragma once

#include "halfline/system.hpp"
#include "halfline/types.hpp"

#include <vector>

namespace halfline {

/// Open sector of constancy for the ordering of Re(lambda b_j).
/// perm[i] = original index of the i-th largest Re(lambda b) inside the arc;
/// ties keep the original relative order.
struct Sector {
    int kappa = 0; ///< 1-based label; kappa = 1 contains arg lambda = 0+
    AngularInterval arc;
    std::vector<int> perm;
};

struct SectorGeometry {
    std::vector<Sector> sectors;
    bool full_plane = false;

    /// Sector whose closure contains lambda (smallest kappa on boundaries).
    const Sector& locate(Complex lambda) const;
    /// Sector with the given 1-based label.
    const Sector& by_kappa(int kappa) const;
};

/// Sectors cut by the rays Re(lambda(b_j - b_l)) = 0.  With all b equal the
/// geometry degenerates to the full punctured plane.
SectorGeometry compute_sectors(const std::vector<Complex>& b);

/// Formula geometry for the roots-of-unity configuration: 2n sectors of
/// opening pi/n starting at arg lambda = 0.  This is also the convention
/// used for n = 2 (four quarter-planes).
SectorGeometry formula_sectors(int n);

// ---------------------------------------------------------------------------
// Neighboring-sector ("large sector") data for the canonical roots-of-unity
// numbering.  All indices here are 1-based to match the formulas.
// ---------------------------------------------------------------------------
struct LargeSectorData {
    int n = 0;
    int m = 0;
    int sigma = 0;                 ///< label of the sector neighboring Gamma_1
    AngularInterval omega_region;  ///< Omega_m, union of the two closed sectors
    AngularInterval lambda_region; ///< Lambda, the mid-sector strip
    AngularInterval gamma1;        ///< Gamma_1
    AngularInterval gammasigma;    ///< Gamma_sigma
    Complex omega_mid;             ///< weight b_m e^{(-1)^m i pi/n} used on Lambda
    Complex omega_gamma1;          ///< b_m
    Complex omega_gammasigma;      ///< b_{m+1} (b_n when m = n)
};

/// Requires spec.b to equal roots_of_unity_ordered(n) and 2 <= m <= n.
LargeSectorData large_sector(const SystemSpec& spec, int m);

struct OrderingCheck {
    bool ok = false;
    double min_slack = 0.0; ///< min over rows of the defining inequalities
};

/// Re(lambda b_j) >= Re(lambda omega) for j < pivot (0-based) and
/// Re(lambda omega) >= Re(lambda b_l) for l >= pivot.
OrderingCheck check_ordering(const std::vector<Complex>& b, int pivot0, Complex omega,
                             Complex lambda, double slack_tol = 1e-12);

} // namespace halfline
