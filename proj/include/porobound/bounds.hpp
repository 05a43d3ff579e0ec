#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "microstructure.hpp"
#include "poroelastic.hpp"
#include "voxel_fem.hpp"

namespace porobound {

using PoroMatrix7d = PoroMatrix7<double>;

// Unit loads e_1..e_7 of the generalized strain and stress spaces.
std::array<GammaVector7d, 7> canonical_gamma_cases();
std::array<KappaVector7d, 7> canonical_kappa_cases();

struct CaseDiagnostics {
    LoadFamily family = LoadFamily::displacement_pressure;
    int index = 0;               // 1..7
    double residual = 0;
    int iterations = 0;
    // Averaging theorem: |mean strain - eps0| or |mean stress - sigma0| (max norm).
    double averaging_deviation = 0;
    // Max-norm gap between the surface and volume forms of that average.
    double surface_volume_gap = 0;
    double seconds = 0;
};

struct BoundEstimate {
    PoroMatrix7d matrix;
    std::vector<CaseDiagnostics> cases; // ordered by case index
};

// Number of worker threads for the seven independent case solves.
// 0 selects the hardware concurrency.
struct ParallelOptions {
    unsigned threads = 0;
};

// Column k = volume average of kappa under the unit displacement-pressure load k.
BoundEstimate upper_bound(const Microstructure &m, const SolverOptions &options = {},
                          ParallelOptions parallel = {});

// Column k of the effective compliance = volume average of gamma under the
// unit traction-fluid-content load k; the 7x7 compliance is then inverted.
// Throws NumericalError if its scaled condition number exceeds 1e12.
BoundEstimate lower_bound(const Microstructure &m, const SolverOptions &options = {},
                          ParallelOptions parallel = {});

// Volume-fraction weighted mean of the phase matrices.
PoroMatrix7d voigt_estimate(const Microstructure &m);
// Inverse of the volume-fraction weighted mean of the inverse phase matrices.
PoroMatrix7d reuss_estimate(const Microstructure &m);

// Energy-block comparison of two 7x7 matrices, stiffer minus softer:
// the smallest eigenvalue of the symmetrized 6x6 stiffness-block difference
// and the (7,7) difference. The +-alpha coupling blocks are not compared.
struct OrderingMargins {
    double stiffness_block = 0;
    double storage_entry = 0;

    double min() const { return std::min(stiffness_block, storage_entry); }
};

OrderingMargins ordering_check(const PoroMatrix7d &stiffer, const PoroMatrix7d &softer);

struct EffectiveBiot {
    Vector6<double> alpha;  // mean of -column(1..6, 7) and row(7, 1..6)
    double mismatch = 0;    // max |column + row^T|
};

EffectiveBiot effective_biot(const PoroMatrix7d &a);

struct BoundsConfig {
    bool upper = true;
    bool lower = true;
    SolverOptions solver;
    ParallelOptions parallel;
};

struct SandwichMargins {
    OrderingMargins voigt_upper;  // voigt - upper
    OrderingMargins upper_lower;  // upper - lower
    OrderingMargins lower_reuss;  // lower - reuss
};

struct BoundsResult {
    std::optional<PoroMatrix7d> a_upper, a_lower, a_voigt, a_reuss;
    std::vector<CaseDiagnostics> cases;
    std::optional<OrderingMargins> ordering; // upper - lower
    std::optional<SandwichMargins> sandwich;
};

// Runs the requested families. Voigt accompanies the upper bound and Reuss
// the lower bound.
BoundsResult compute_bounds(const Microstructure &m, const BoundsConfig &config = {});

} // namespace porobound
