#include "porobound/voxel_fem.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <sstream>

namespace porobound {

namespace {

using Matrix24 = Eigen::Matrix<double, 24, 24>;
using Vector24 = Eigen::Matrix<double, 24, 1>;
using BMatrix = Eigen::Matrix<double, 6, 24>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Shape-function gradients of the voxel hexahedron at its 8 Gauss points.
struct VoxelElement {
    std::array<BMatrix, 8> B;
    BMatrix Bbar;    // element average of B
    double weight;   // Gauss weight times Jacobian, identical at every point
    double volume;

    explicit VoxelElement(const Spacing &h) {
        volume = h[0] * h[1] * h[2];
        weight = volume / 8.0;
        const double g = 1.0 / std::sqrt(3.0);
        Bbar.setZero();
        for (int q = 0; q < 8; ++q) {
            const double xi[3] = {(q & 1) ? g : -g, (q & 2) ? g : -g, (q & 4) ? g : -g};
            BMatrix &b = B[q];
            b.setZero();
            for (int l = 0; l < 8; ++l) {
                const double s[3] = {(l & 1) ? 1.0 : -1.0, (l & 2) ? 1.0 : -1.0,
                                     (l & 4) ? 1.0 : -1.0};
                const double f[3] = {1 + s[0] * xi[0], 1 + s[1] * xi[1], 1 + s[2] * xi[2]};
                // dN/dx = dN/dxi * 2/h
                const double dx = 0.125 * s[0] * f[1] * f[2] * 2.0 / h[0];
                const double dy = 0.125 * f[0] * s[1] * f[2] * 2.0 / h[1];
                const double dz = 0.125 * f[0] * f[1] * s[2] * 2.0 / h[2];
                const int c = 3 * l;
                b(0, c + 0) = dx;
                b(1, c + 1) = dy;
                b(2, c + 2) = dz;
                b(3, c + 1) = dz;
                b(3, c + 2) = dy;
                b(4, c + 0) = dz;
                b(4, c + 2) = dx;
                b(5, c + 0) = dy;
                b(5, c + 1) = dx;
            }
            Bbar += b / 8.0;
        }
    }

    Matrix24 stiffness(const Matrix6<double> &D) const {
        Matrix24 K = Matrix24::Zero();
        for (const auto &b : B) K.noalias() += weight * b.transpose() * D * b;
        return K;
    }
};

struct Lattice {
    GridDims dims;
    int nx1, ny1, nz1;

    explicit Lattice(const GridDims &d) : dims(d), nx1(d[0] + 1), ny1(d[1] + 1), nz1(d[2] + 1) {}

    std::size_t num_nodes() const { return std::size_t(nx1) * ny1 * nz1; }
    std::size_t node(int i, int j, int k) const {
        return std::size_t(i) + std::size_t(nx1) * (std::size_t(j) + std::size_t(ny1) * k);
    }
    bool on_boundary(int i, int j, int k) const {
        return i == 0 || j == 0 || k == 0 || i == dims[0] || j == dims[1] || k == dims[2];
    }
    std::array<std::size_t, 24> element_dofs(int i, int j, int k) const {
        std::array<std::size_t, 24> dofs{};
        for (int l = 0; l < 8; ++l) {
            const std::size_t n = node(i + (l & 1), j + ((l >> 1) & 1), k + ((l >> 2) & 1));
            for (int c = 0; c < 3; ++c) dofs[std::size_t(3 * l + c)] = 3 * n + std::size_t(c);
        }
        return dofs;
    }
};

Eigen::Vector3d node_position(const Spacing &h, int i, int j, int k) {
    return {i * h[0], j * h[1], k * h[2]};
}

// One boundary face quad: its four corner nodes, area and outward normal.
struct FaceQuad {
    std::array<std::size_t, 4> nodes;
    double area;
    Eigen::Vector3d normal;
};

template <typename Fn>
void for_each_boundary_quad(const Lattice &lat, const Spacing &h, Fn &&fn) {
    const auto &d = lat.dims;
    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        const double area = h[std::size_t(a1)] * h[std::size_t(a2)];
        for (int side = 0; side < 2; ++side) {
            Eigen::Vector3d n = Eigen::Vector3d::Zero();
            n[axis] = side ? 1.0 : -1.0;
            for (int p = 0; p < d[std::size_t(a1)]; ++p)
                for (int q = 0; q < d[std::size_t(a2)]; ++q) {
                    FaceQuad quad{{}, area, n};
                    for (int c = 0; c < 4; ++c) {
                        std::array<int, 3> ijk{};
                        ijk[std::size_t(axis)] = side ? d[std::size_t(axis)] : 0;
                        ijk[std::size_t(a1)] = p + (c & 1);
                        ijk[std::size_t(a2)] = q + ((c >> 1) & 1);
                        quad.nodes[std::size_t(c)] = lat.node(ijk[0], ijk[1], ijk[2]);
                    }
                    fn(quad);
                }
        }
    }
}

struct PcgResult {
    Eigen::VectorXd x;
    double residual = 0;
    int iterations = 0;
    std::vector<double> history;
};

// Jacobi-preconditioned conjugate gradients. Convergence is judged on the
// true residual; a recurrence that drifts past the tolerance is restarted.
PcgResult pcg(const SparseMatrix &K, const Eigen::VectorXd &b, double tol, int max_iter) {
    PcgResult out;
    out.x = Eigen::VectorXd::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) return out;

    const Eigen::VectorXd inv_diag = K.diagonal().cwiseInverse();
    Eigen::VectorXd r = b, z, p, Kp;
    while (true) {
        z = inv_diag.cwiseProduct(r);
        p = z;
        double rz = r.dot(z);
        double rel = r.norm() / bnorm;
        while (rel > tol && out.iterations < max_iter) {
            Kp.noalias() = K * p;
            const double alpha = rz / p.dot(Kp);
            out.x.noalias() += alpha * p;
            r.noalias() -= alpha * Kp;
            rel = r.norm() / bnorm;
            out.history.push_back(rel);
            ++out.iterations;
            if (rel <= tol) break;
            z = inv_diag.cwiseProduct(r);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        r = b - K * out.x;
        out.residual = r.norm() / bnorm;
        if (out.residual <= tol || out.iterations >= max_iter) break;
    }
    if (out.residual > tol) {
        std::ostringstream msg;
        msg << "PCG did not converge: relative residual " << out.residual << " after "
            << out.iterations << " iterations (tolerance " << tol << ")";
        throw SolverDivergedError(msg.str(), out.history);
    }
    return out;
}

// Per-phase element data for one load family.
struct PhaseOperator {
    Matrix24 K;
    Vector6<double> eigenstress; // enters as f_int = K u + Bint^T eigenstress
};

struct Problem {
    LoadFamily family;
    std::string label;
    GammaVector7d gamma0;  // displacement-pressure data
    KappaVector7d kappa0;  // traction-fluid-content data
};

FieldSolution solve(const Microstructure &m, const Problem &prob, const SolverOptions &opt) {
    if (!(opt.tolerance > 0)) throw InputError("solver tolerance must be positive");
    if (!(opt.max_iter_factor > 0)) throw InputError("iteration cap factor must be positive");

    const Lattice lat(m.dims());
    const Spacing &h = m.spacing();
    const VoxelElement elem(h);
    const std::size_t num_elements = m.num_voxels();
    const std::size_t ndof = 3 * lat.num_nodes();
    const bool dirichlet = prob.family == LoadFamily::displacement_pressure;

    if (opt.body_force.size() != 0 && std::size_t(opt.body_force.cols()) != num_elements)
        throw InputError("body force must have one column per voxel");

    std::vector<PhaseOperator> ops;
    for (const auto &mat : m.phases()) {
        if (dirichlet) {
            ops.push_back({elem.stiffness(mat.stiffness), -mat.biot_alpha * prob.gamma0.pressure});
        } else {
            ops.push_back({elem.stiffness(undrained_stiffness(mat)),
                           -mat.biot_alpha * (mat.biot_modulus * prob.kappa0.fluid_content)});
        }
    }
    const Eigen::Matrix<double, 24, 6> Bint = elem.volume * elem.Bbar.transpose();

    // Constraints.
    std::vector<char> fixed(ndof, 0);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(ndof));
    if (dirichlet) {
        for (int k = 0; k <= lat.dims[2]; ++k)
            for (int j = 0; j <= lat.dims[1]; ++j)
                for (int i = 0; i <= lat.dims[0]; ++i) {
                    if (!lat.on_boundary(i, j, k)) continue;
                    const std::size_t n = lat.node(i, j, k);
                    const Eigen::Vector3d ub =
                        boundary_displacement(prob.gamma0, node_position(h, i, j, k));
                    for (int c = 0; c < 3; ++c) {
                        fixed[3 * n + std::size_t(c)] = 1;
                        u[Eigen::Index(3 * n + std::size_t(c))] = ub[c];
                    }
                }
    } else {
        const std::size_t n0 = lat.node(0, 0, 0);
        const std::size_t n1 = lat.node(lat.dims[0], 0, 0);
        const std::size_t n2 = lat.node(0, lat.dims[1], 0);
        fixed[3 * n0 + 0] = fixed[3 * n0 + 1] = fixed[3 * n0 + 2] = 1;
        fixed[3 * n1 + 1] = fixed[3 * n1 + 2] = 1;
        fixed[3 * n2 + 2] = 1;
    }

    std::vector<Eigen::Index> free_index(ndof, -1);
    Eigen::Index num_free = 0;
    for (std::size_t d = 0; d < ndof; ++d)
        if (!fixed[d]) free_index[d] = num_free++;

    // External loads on the full dof vector.
    Eigen::VectorXd f_ext = Eigen::VectorXd::Zero(Eigen::Index(ndof));
    if (!dirichlet) {
        const Eigen::Vector3d t[3] = {
            boundary_traction(prob.kappa0, Eigen::Vector3d::UnitX()),
            boundary_traction(prob.kappa0, Eigen::Vector3d::UnitY()),
            boundary_traction(prob.kappa0, Eigen::Vector3d::UnitZ())};
        for_each_boundary_quad(lat, h, [&](const FaceQuad &quad) {
            // Constant traction over a bilinear face: each corner takes a quarter.
            Eigen::Vector3d tq = Eigen::Vector3d::Zero();
            for (int a = 0; a < 3; ++a) tq += quad.normal[a] * t[a];
            for (std::size_t n : quad.nodes)
                f_ext.segment<3>(Eigen::Index(3 * n)) += 0.25 * quad.area * tq;
        });
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(num_elements * 24 * 24);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(num_free);
    for (int k = 0; k < lat.dims[2]; ++k)
        for (int j = 0; j < lat.dims[1]; ++j)
            for (int i = 0; i < lat.dims[0]; ++i) {
                const std::size_t e = m.voxel_index(i, j, k);
                const PhaseOperator &op = ops[std::size_t(m.phase_of()[e])];
                const auto dofs = lat.element_dofs(i, j, k);
                Vector24 fe = -Bint * op.eigenstress;
                if (opt.body_force.size() != 0)
                    for (int l = 0; l < 8; ++l)
                        fe.segment<3>(3 * l) += (elem.volume / 8.0) * opt.body_force.col(Eigen::Index(e));
                for (int a = 0; a < 24; ++a) {
                    const Eigen::Index fa = free_index[dofs[std::size_t(a)]];
                    if (fa < 0) continue;
                    rhs[fa] += fe[a];
                    for (int b = 0; b < 24; ++b) {
                        const std::size_t db = dofs[std::size_t(b)];
                        const Eigen::Index fb = free_index[db];
                        if (fb >= 0)
                            triplets.emplace_back(fa, fb, op.K(a, b));
                        else
                            rhs[fa] -= op.K(a, b) * u[Eigen::Index(db)];
                    }
                }
            }
    for (std::size_t d = 0; d < ndof; ++d)
        if (free_index[d] >= 0) rhs[free_index[d]] += f_ext[Eigen::Index(d)];

    FieldSolution sol;
    sol.family = prob.family;
    sol.case_label = prob.label;
    sol.dims = m.dims();
    sol.spacing = h;

    if (num_free > 0) {
        SparseMatrix K(num_free, num_free);
        K.setFromTriplets(triplets.begin(), triplets.end());
        triplets.clear();
        triplets.shrink_to_fit();
        const int cap = int(std::ceil(opt.max_iter_factor * std::sqrt(double(num_free))));
        PcgResult res = pcg(K, rhs, opt.tolerance, cap);
        for (std::size_t d = 0; d < ndof; ++d)
            if (free_index[d] >= 0) u[Eigen::Index(d)] = res.x[free_index[d]];
        sol.residual_norm = res.residual;
        sol.iterations = res.iterations;
        sol.residual_history = std::move(res.history);
    }

    // Post-processing.
    sol.displacement = u;
    sol.nodal_force = Eigen::VectorXd::Zero(Eigen::Index(ndof));
    sol.pressure.resize(Eigen::Index(num_elements));
    sol.element_gamma.resize(num_elements);
    sol.element_kappa.resize(num_elements);
    sol.element_energy.resize(Eigen::Index(num_elements));
    for (int k = 0; k < lat.dims[2]; ++k)
        for (int j = 0; j < lat.dims[1]; ++j)
            for (int i = 0; i < lat.dims[0]; ++i) {
                const std::size_t e = m.voxel_index(i, j, k);
                const auto &mat = m.material_at(e);
                const PhaseOperator &op = ops[std::size_t(m.phase_of()[e])];
                const auto dofs = lat.element_dofs(i, j, k);
                Vector24 ue;
                for (int a = 0; a < 24; ++a) ue[a] = u[Eigen::Index(dofs[std::size_t(a)])];

                auto pressure_at = [&](const Vector6<double> &eps) {
                    return dirichlet ? prob.gamma0.pressure
                                     : mat.biot_modulus *
                                           (prob.kappa0.fluid_content - mat.biot_alpha.dot(eps));
                };

                GammaVector7d g;
                g.strain = elem.Bbar * ue;
                g.pressure = pressure_at(g.strain);
                sol.element_gamma[e] = g;
                sol.element_kappa[e] = apply_constitutive(mat, g);
                sol.pressure[Eigen::Index(e)] = g.pressure;

                double energy = 0;
                for (const auto &b : elem.B) {
                    const Vector6<double> eps = b * ue;
                    const double p = pressure_at(eps);
                    energy += 0.5 * (eps.dot(mat.stiffness * eps) + p * p / mat.biot_modulus);
                }
                sol.element_energy[Eigen::Index(e)] = energy / 8.0;

                const Vector24 fe = op.K * ue + Bint * op.eigenstress;
                for (int a = 0; a < 24; ++a) sol.nodal_force[Eigen::Index(dofs[std::size_t(a)])] += fe[a];
            }
    return sol;
}

std::string case_label(LoadFamily family, const Vector7<double> &load) {
    std::ostringstream s;
    s << to_string(family) << " [";
    for (int i = 0; i < 7; ++i) s << (i ? "," : "") << load[i];
    s << "]";
    return s.str();
}

} // namespace

const char *to_string(LoadFamily family) {
    return family == LoadFamily::displacement_pressure ? "displacement-pressure"
                                                       : "traction-fluid-content";
}

Eigen::Vector3d boundary_displacement(const GammaVector7d &gamma0, const Eigen::Vector3d &x) {
    return strain_tensor(gamma0.strain) * x;
}

Eigen::Vector3d boundary_traction(const KappaVector7d &kappa0, const Eigen::Vector3d &normal) {
    return stress_tensor(kappa0.stress) * normal;
}

FieldSolution solve_displacement_pressure_case(const Microstructure &m,
                                               const GammaVector7d &gamma0,
                                               const SolverOptions &options) {
    return solve(m,
                 {LoadFamily::displacement_pressure,
                  case_label(LoadFamily::displacement_pressure, gamma0.stacked()), gamma0, {}},
                 options);
}

FieldSolution solve_traction_fluid_content_case(const Microstructure &m,
                                                const KappaVector7d &kappa0,
                                                const SolverOptions &options) {
    return solve(m,
                 {LoadFamily::traction_fluid_content,
                  case_label(LoadFamily::traction_fluid_content, kappa0.stacked()), {}, kappa0},
                 options);
}

VolumeSurfacePair<Vector6<double>> average_strain(const FieldSolution &sol) {
    VolumeSurfacePair<Vector6<double>> out{Vector6<double>::Zero(), Vector6<double>::Zero()};
    for (const auto &g : sol.element_gamma) out.volume += g.strain;
    if (!sol.element_gamma.empty()) out.volume /= double(sol.element_gamma.size());

    const Lattice lat(sol.dims);
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero(); // int_S u_i n_j
    for_each_boundary_quad(lat, sol.spacing, [&](const FaceQuad &quad) {
        // Bilinear u: the face integral is area times the corner mean.
        Eigen::Vector3d ubar = Eigen::Vector3d::Zero();
        for (std::size_t n : quad.nodes) ubar += sol.displacement.segment<3>(Eigen::Index(3 * n));
        G += (0.25 * quad.area) * ubar * quad.normal.transpose();
    });
    out.surface = contracted_strain<double>((G + G.transpose()) / (2.0 * sol.volume()));
    return out;
}

VolumeSurfacePair<Vector6<double>> average_stress(const FieldSolution &sol,
                                                  const Eigen::Matrix3Xd &body_force) {
    VolumeSurfacePair<Vector6<double>> out{Vector6<double>::Zero(), Vector6<double>::Zero()};
    for (const auto &k : sol.element_kappa) out.volume += k.stress;
    if (!sol.element_kappa.empty()) out.volume /= double(sol.element_kappa.size());

    const Lattice lat(sol.dims);
    const auto &h = sol.spacing;
    const double ve = h[0] * h[1] * h[2];
    const bool has_body = body_force.size() != 0;
    if (has_body && std::size_t(body_force.cols()) != sol.element_kappa.size())
        throw InputError("body force must have one column per voxel");

    // Consistent nodal body loads.
    Eigen::VectorXd body_nodal = Eigen::VectorXd::Zero(sol.nodal_force.size());
    Eigen::Matrix3d F = Eigen::Matrix3d::Zero(); // int_V f_i x_j
    if (has_body) {
        for (int k = 0; k < lat.dims[2]; ++k)
            for (int j = 0; j < lat.dims[1]; ++j)
                for (int i = 0; i < lat.dims[0]; ++i) {
                    const auto e = Eigen::Index(i + lat.dims[0] * (j + lat.dims[1] * k));
                    const Eigen::Vector3d f = body_force.col(e);
                    const Eigen::Vector3d xc((i + 0.5) * h[0], (j + 0.5) * h[1], (k + 0.5) * h[2]);
                    F += ve * f * xc.transpose();
                    for (int l = 0; l < 8; ++l) {
                        const std::size_t n =
                            lat.node(i + (l & 1), j + ((l >> 1) & 1), k + ((l >> 2) & 1));
                        body_nodal.segment<3>(Eigen::Index(3 * n)) += (ve / 8.0) * f;
                    }
                }
    }

    Eigen::Matrix3d H = Eigen::Matrix3d::Zero(); // sum over boundary nodes of t_i x_j
    for (int k = 0; k <= lat.dims[2]; ++k)
        for (int j = 0; j <= lat.dims[1]; ++j)
            for (int i = 0; i <= lat.dims[0]; ++i) {
                if (!lat.on_boundary(i, j, k)) continue;
                const auto n = Eigen::Index(3 * lat.node(i, j, k));
                const Eigen::Vector3d t = sol.nodal_force.segment<3>(n) - body_nodal.segment<3>(n);
                H += t * node_position(h, i, j, k).transpose();
            }
    const Eigen::Matrix3d S = (H + H.transpose() + F + F.transpose()) / (2.0 * sol.volume());
    out.surface = contracted_stress<double>(S);
    return out;
}

KappaVector7d average_kappa(const FieldSolution &sol) {
    Vector7<double> acc = Vector7<double>::Zero();
    for (const auto &k : sol.element_kappa) acc += k.stacked();
    if (!sol.element_kappa.empty()) acc /= double(sol.element_kappa.size());
    return KappaVector7d::from(acc);
}

GammaVector7d average_gamma(const FieldSolution &sol) {
    Vector7<double> acc = Vector7<double>::Zero();
    for (const auto &g : sol.element_gamma) acc += g.stacked();
    if (!sol.element_gamma.empty()) acc /= double(sol.element_gamma.size());
    return GammaVector7d::from(acc);
}

double average_energy(const FieldSolution &sol) {
    return sol.element_energy.size() ? sol.element_energy.mean() : 0.0;
}

} // namespace porobound
