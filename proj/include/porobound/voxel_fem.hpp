////////////////////////////////////////////////////////////////////////////////
// voxel_fem.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Voxel finite-element solves of the two homogeneous boundary value
//      problems on an RVE, and the volume/surface averaging operations.
//
//      Elements are the voxels: 8-node trilinear hexahedra, 2x2x2 Gauss
//      quadrature, element-constant material. Nodes are numbered x-fastest
//      over an (nx+1) x (ny+1) x (nz+1) lattice with the origin at a corner.
//
//      Displacement-pressure problem: u = eps0 x on every boundary node and
//      p = p0 everywhere; p0 enters as the eigenstress -alpha p0.
//
//      Traction-fluid-content problem: t = sigma0 n on the boundary faces and
//      zeta = zeta0 everywhere. Eliminating p = M_b (zeta0 - alpha.eps) gives
//      the undrained stiffness M + M_b alpha alpha^T and the eigenstress
//      -alpha M_b zeta0. Rigid modes are pinned with the 3-2-1 rule.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "microstructure.hpp"
#include "poroelastic.hpp"

namespace porobound {

enum class LoadFamily { displacement_pressure, traction_fluid_content };

const char *to_string(LoadFamily family);

struct SolverOptions {
    double tolerance = 1e-10;      // relative residual of the reduced system
    double max_iter_factor = 50;   // cap = factor * sqrt(number of unknowns)
    // Optional per-element body force (3 x num_voxels, N/m^3). Empty = none.
    Eigen::Matrix3Xd body_force;
};

struct FieldSolution {
    LoadFamily family = LoadFamily::displacement_pressure;
    std::string case_label;
    GridDims dims{};
    Spacing spacing{};

    Eigen::VectorXd displacement; // 3 per node
    Eigen::VectorXd nodal_force;  // assembled internal force, 3 per node
    Eigen::VectorXd pressure;     // per element

    // Element averages of the generalized strain and stress.
    std::vector<GammaVector7d> element_gamma;
    std::vector<KappaVector7d> element_kappa;
    // Element average of 1/2 kappa.gamma, integrated at the Gauss points.
    Eigen::VectorXd element_energy;

    double residual_norm = 0;
    int iterations = 0;
    std::vector<double> residual_history;

    std::size_t num_nodes() const {
        return std::size_t(dims[0] + 1) * (dims[1] + 1) * (dims[2] + 1);
    }
    double volume() const {
        return double(dims[0]) * dims[1] * dims[2] * spacing[0] * spacing[1] * spacing[2];
    }
};

// Boundary data for a unit generalized load.
Eigen::Vector3d boundary_displacement(const GammaVector7d &gamma0, const Eigen::Vector3d &x);
Eigen::Vector3d boundary_traction(const KappaVector7d &kappa0, const Eigen::Vector3d &normal);

// Throws SolverDivergedError if PCG does not reach the tolerance within the cap.
FieldSolution solve_displacement_pressure_case(const Microstructure &m,
                                               const GammaVector7d &gamma0,
                                               const SolverOptions &options = {});
FieldSolution solve_traction_fluid_content_case(const Microstructure &m,
                                                const KappaVector7d &kappa0,
                                                const SolverOptions &options = {});

template <typename T>
struct VolumeSurfacePair {
    T volume;  // volume average of element fields
    T surface; // boundary-integral form of the same average
};

// Volume average of element strains and (1/2V) int_S (u_i n_j + u_j n_i).
VolumeSurfacePair<Vector6<double>> average_strain(const FieldSolution &sol);

// Volume average of element stresses and
// (1/2V) [ int_S (x_j t_i + x_i t_j) + int_V (x_j f_i + x_i f_j) ].
// Boundary tractions are the nodal reactions of the solved field.
VolumeSurfacePair<Vector6<double>> average_stress(const FieldSolution &sol,
                                                  const Eigen::Matrix3Xd &body_force = {});

KappaVector7d average_kappa(const FieldSolution &sol);
GammaVector7d average_gamma(const FieldSolution &sol);
double average_energy(const FieldSolution &sol);

} // namespace porobound
