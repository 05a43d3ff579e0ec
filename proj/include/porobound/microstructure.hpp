#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poroelastic.hpp"

namespace porobound {

using GridDims = std::array<int, 3>;
using Spacing = std::array<double, 3>;
using Shift = std::array<int, 3>;

// Voxelized RVE. Voxel ordering is x-fastest, then y, then z.
class Microstructure {
public:
    // Validates dimensions, phase ids and every phase material.
    Microstructure(GridDims dims, Spacing spacing, std::vector<int> phase_of,
                   std::vector<PoroelasticMateriald> phases);

    const GridDims &dims() const { return m_dims; }
    const Spacing &spacing() const { return m_spacing; }
    const std::vector<int> &phase_of() const { return m_phase_of; }
    const std::vector<PoroelasticMateriald> &phases() const { return m_phases; }

    int num_phases() const { return int(m_phases.size()); }
    std::size_t num_voxels() const { return m_phase_of.size(); }
    double voxel_volume() const { return m_spacing[0] * m_spacing[1] * m_spacing[2]; }
    double volume() const { return voxel_volume() * double(num_voxels()); }

    std::size_t voxel_index(int i, int j, int k) const {
        return std::size_t(i) + std::size_t(m_dims[0]) * (std::size_t(j) + std::size_t(m_dims[1]) * k);
    }
    int phase_at(int i, int j, int k) const { return m_phase_of[voxel_index(i, j, k)]; }
    const PoroelasticMateriald &material_at(std::size_t voxel) const {
        return m_phases[m_phase_of[voxel]];
    }

private:
    GridDims m_dims;
    Spacing m_spacing;
    std::vector<int> m_phase_of;
    std::vector<PoroelasticMateriald> m_phases;
};

// Contents of an RVE file before any material validation; used by the
// validate command to itemize failures instead of stopping at the first.
struct RveDocument {
    GridDims dims{};
    Spacing spacing{};
    std::vector<PoroelasticMateriald> phases;
    std::vector<int> voxels;
};

// Structured-text (JSON) RVE format:
//   dims        [nx, ny, nz]
//   spacing_m   [hx, hy, hz]
//   phases      [{stiffness: 36 row-major, biot_alpha: 6, biot_modulus_pa}]
//   voxels      inline integer array, or a path (relative to the RVE file)
//               to a raw uint8 file with the same ordering
// Throws InputError on syntax, schema or length problems.
RveDocument read_rve_document(const std::filesystem::path &path);
RveDocument parse_rve_document(const std::string &text,
                               const std::filesystem::path &base_dir = {});

Microstructure load_rve(const std::filesystem::path &path);
Microstructure to_microstructure(RveDocument doc);

// Inline-voxel JSON for a microstructure; used by tests and tooling.
std::string dump_rve(const Microstructure &m);

std::vector<double> volume_fractions(const Microstructure &m);

struct TwoPointTable {
    Shift shift{};
    // prob(a, b): fraction of voxels x with phase(x) = a and phase(x + r) = b.
    Eigen::MatrixXd prob;
};

// Periodic (wrap-around) spatial estimator of two-point phase probabilities.
TwoPointTable two_point_probability(const Microstructure &m, const Shift &shift);

struct HomogeneityReport {
    int subdivisions = 0;
    std::vector<Shift> shifts;
    std::vector<double> per_shift; // max deviation for each shift
    double score = 0;
};

// Splits the grid into subdivisions^3 windows, estimates two-point tables in
// each window (periodic within the window) and reports the largest absolute
// deviation from the whole-grid estimate.
HomogeneityReport homogeneity_score(const Microstructure &m, int subdivisions,
                                    std::span<const Shift> shifts);

} // namespace porobound
