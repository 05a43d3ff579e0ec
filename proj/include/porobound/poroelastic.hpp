////////////////////////////////////////////////////////////////////////////////
// poroelastic.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Contracted-notation constitutive algebra for linear anisotropic
//      poroelasticity with zero in-situ stress and pore pressure:
//
//          sigma = M eps - alpha p
//          zeta  = alpha . eps + p / M_b
//
//      stacked as kappa = A gamma with
//
//          A = [ M       -alpha ]      gamma = (eps, p),  kappa = (sigma, zeta)
//              [ alpha^T  1/M_b ]
//
//      Contracted index order is 11, 22, 33, 23, 31, 12. Strain components
//      4..6 are engineering shears (2 eps_ij), stresses carry no factor, so
//      the plain dot product kappa . gamma equals sigma:eps + p zeta.
//
//      Everything here is templated on the scalar type and header-only.
*/
////////////////////////////////////////////////////////////////////////////////
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace porobound {

template <typename Scalar> using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;
template <typename Scalar> using Vector7 = Eigen::Matrix<Scalar, 7, 1>;

// 7x7 generalized constitutive matrix (A, its effective bounds, or inverses).
template <typename Scalar> using PoroMatrix7 = Eigen::Matrix<Scalar, 7, 7>;

////////////////////////////////////////////////////////////////////////////////
// Index contraction
////////////////////////////////////////////////////////////////////////////////
struct ContractedIndex {
    int beta; // 1..6

    friend bool operator==(ContractedIndex, ContractedIndex) = default;
};

// (i, j) in {1,2,3}^2 -> beta in 1..6.
inline ContractedIndex contract_index(int i, int j) {
    if (i < 1 || i > 3 || j < 1 || j > 3) {
        std::ostringstream msg;
        msg << "tensor index pair (" << i << ", " << j << ") out of range 1..3";
        throw InputError(msg.str());
    }
    if (i == j) return {i};
    // 23 -> 4, 13 -> 5, 12 -> 6
    return {9 - i - j};
}

// beta -> canonical (i, j) with i <= j for the off-diagonal pairs.
inline std::pair<int, int> expand_index(ContractedIndex idx) {
    switch (idx.beta) {
        case 1: return {1, 1};
        case 2: return {2, 2};
        case 3: return {3, 3};
        case 4: return {2, 3};
        case 5: return {1, 3};
        case 6: return {1, 2};
        default: break;
    }
    throw InputError("contracted index " + std::to_string(idx.beta) + " out of range 1..6");
}

// Engineering-shear contracted strain -> symmetric tensor.
template <typename Scalar>
Matrix3<Scalar> strain_tensor(const Vector6<Scalar> &e) {
    Matrix3<Scalar> t;
    const Scalar h = Scalar(0.5);
    t << e[0],     h * e[5], h * e[4],
         h * e[5], e[1],     h * e[3],
         h * e[4], h * e[3], e[2];
    return t;
}

template <typename Scalar>
Matrix3<Scalar> stress_tensor(const Vector6<Scalar> &s) {
    Matrix3<Scalar> t;
    t << s[0], s[5], s[4],
         s[5], s[1], s[3],
         s[4], s[3], s[2];
    return t;
}

template <typename Scalar>
Vector6<Scalar> contracted_strain(const Matrix3<Scalar> &t) {
    Vector6<Scalar> e;
    e << t(0, 0), t(1, 1), t(2, 2), t(1, 2) + t(2, 1), t(0, 2) + t(2, 0), t(0, 1) + t(1, 0);
    return e;
}

template <typename Scalar>
Vector6<Scalar> contracted_stress(const Matrix3<Scalar> &t) {
    const Scalar h = Scalar(0.5);
    Vector6<Scalar> s;
    s << t(0, 0), t(1, 1), t(2, 2), h * (t(1, 2) + t(2, 1)), h * (t(0, 2) + t(2, 0)),
         h * (t(0, 1) + t(1, 0));
    return s;
}

////////////////////////////////////////////////////////////////////////////////
// Generalized strain / stress
////////////////////////////////////////////////////////////////////////////////
template <typename Scalar>
struct GammaVector7 {
    Vector6<Scalar> strain = Vector6<Scalar>::Zero();
    Scalar pressure = Scalar(0);

    Vector7<Scalar> stacked() const {
        Vector7<Scalar> v;
        v << strain, pressure;
        return v;
    }
    static GammaVector7 from(const Vector7<Scalar> &v) {
        return {v.template head<6>(), v[6]};
    }
};

template <typename Scalar>
struct KappaVector7 {
    Vector6<Scalar> stress = Vector6<Scalar>::Zero();
    Scalar fluid_content = Scalar(0);

    Vector7<Scalar> stacked() const {
        Vector7<Scalar> v;
        v << stress, fluid_content;
        return v;
    }
    static KappaVector7 from(const Vector7<Scalar> &v) {
        return {v.template head<6>(), v[6]};
    }
};

using GammaVector7d = GammaVector7<double>;
using KappaVector7d = KappaVector7<double>;

////////////////////////////////////////////////////////////////////////////////
// Material
////////////////////////////////////////////////////////////////////////////////
template <typename Scalar>
struct PoroelasticMaterial {
    Matrix6<Scalar> stiffness = Matrix6<Scalar>::Identity(); // M (Pa)
    Vector6<Scalar> biot_alpha = Vector6<Scalar>::Zero();    // contracted alpha_ij
    Scalar biot_modulus = Scalar(1);                          // M_b (Pa)
};

using PoroelasticMateriald = PoroelasticMaterial<double>;

struct MaterialValidation {
    double symmetry_violation = 0; // max |M_ab - M_ba| as stored
    double min_eigenvalue = 0;
    double eigenvalue_threshold = 0;
    double biot_modulus = 0;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

// Never throws; collects every failed check.
template <typename Scalar>
MaterialValidation validate_material(const PoroelasticMaterial<Scalar> &m) {
    MaterialValidation report;
    const auto &M = m.stiffness;
    report.biot_modulus = double(m.biot_modulus);

    if (!M.allFinite() || !m.biot_alpha.allFinite() || !std::isfinite(double(m.biot_modulus))) {
        report.failures.push_back("non-finite material parameter");
        return report;
    }

    report.symmetry_violation = double((M - M.transpose()).cwiseAbs().maxCoeff());
    if (report.symmetry_violation != 0.0) {
        std::ostringstream msg;
        msg << "stiffness not symmetric: max |M_ab - M_ba| = " << report.symmetry_violation;
        report.failures.push_back(msg.str());
    }

    const Matrix6<Scalar> sym = Scalar(0.5) * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix6<Scalar>> es(sym, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = double(es.eigenvalues().minCoeff());
    report.eigenvalue_threshold = 1e-12 * double(M.cwiseAbs().maxCoeff());
    if (!(report.min_eigenvalue > report.eigenvalue_threshold)) {
        std::ostringstream msg;
        msg << "stiffness not positive definite: min eigenvalue " << report.min_eigenvalue;
        report.failures.push_back(msg.str());
    }

    if (!(m.biot_modulus > Scalar(0))) {
        std::ostringstream msg;
        msg << "biot modulus must be positive, got " << report.biot_modulus;
        report.failures.push_back(msg.str());
    }
    return report;
}

template <typename Scalar>
void require_valid(const PoroelasticMaterial<Scalar> &m) {
    auto report = validate_material(m);
    if (!report.ok()) throw InputError("invalid material: " + report.failures.front());
}

template <typename Scalar>
KappaVector7<Scalar> apply_constitutive(const PoroelasticMaterial<Scalar> &m,
                                        const GammaVector7<Scalar> &g) {
    KappaVector7<Scalar> k;
    k.stress = m.stiffness * g.strain - m.biot_alpha * g.pressure;
    k.fluid_content = m.biot_alpha.dot(g.strain) + g.pressure / m.biot_modulus;
    return k;
}

template <typename Scalar>
PoroMatrix7<Scalar> assemble_A(const PoroelasticMaterial<Scalar> &m) {
    PoroMatrix7<Scalar> A;
    A.template topLeftCorner<6, 6>() = m.stiffness;
    A.template topRightCorner<6, 1>() = -m.biot_alpha;
    A.template bottomLeftCorner<1, 6>() = m.biot_alpha.transpose();
    A(6, 6) = Scalar(1) / m.biot_modulus;
    return A;
}

// M + M_b alpha alpha^T: stiffness at fixed fluid content.
template <typename Scalar>
Matrix6<Scalar> undrained_stiffness(const PoroelasticMaterial<Scalar> &m) {
    return m.stiffness + m.biot_modulus * m.biot_alpha * m.biot_alpha.transpose();
}

// 2-norm condition number of D A D with D = diag(|a_ii|^-1/2).
template <typename Scalar, int N>
double scaled_condition_number(const Eigen::Matrix<Scalar, N, N> &A) {
    Eigen::Matrix<Scalar, N, 1> d = A.diagonal().cwiseAbs();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d[i] = d[i] > Scalar(0) ? Scalar(1) / std::sqrt(d[i]) : Scalar(1);
    const Eigen::Matrix<Scalar, N, N> S = d.asDiagonal() * A * d.asDiagonal();
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, N, N>> svd(S);
    const auto &sv = svd.singularValues();
    if (!(sv[sv.size() - 1] > Scalar(0))) return std::numeric_limits<double>::infinity();
    return double(sv[0] / sv[sv.size() - 1]);
}

// Inverse through the diagonally equilibrated matrix, D (D A D)^-1 D.
template <typename Scalar, int N>
Eigen::Matrix<Scalar, N, N> equilibrated_inverse(const Eigen::Matrix<Scalar, N, N> &A) {
    Eigen::Matrix<Scalar, N, 1> d = A.diagonal().cwiseAbs();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d[i] = d[i] > Scalar(0) ? Scalar(1) / std::sqrt(d[i]) : Scalar(1);
    const Eigen::Matrix<Scalar, N, N> S = d.asDiagonal() * A * d.asDiagonal();
    return d.asDiagonal() * S.fullPivLu().inverse() * d.asDiagonal();
}

template <typename Scalar>
struct ComplianceForm {
    Matrix6<Scalar> compliance; // C (1/Pa)
    Scalar hooke_constant;      // C_h
    Vector6<Scalar> skempton;   // B, contracted
};

template <typename Scalar>
struct InvertedPoroMatrix {
    PoroMatrix7<Scalar> inverse;
    ComplianceForm<Scalar> compliance_form;
};

// Dense inverse of A plus the compliance form read off its blocks:
// C = upper 6x6 block, C_h = (7,7) entry, coupling column = (1/3) C_h B.
template <typename Scalar>
InvertedPoroMatrix<Scalar> invert_A(const PoroMatrix7<Scalar> &A,
                                    double max_condition = 1e14) {
    const double cond = scaled_condition_number(A);
    if (!(cond <= max_condition)) {
        std::ostringstream msg;
        msg << "poroelastic matrix is singular or ill-conditioned (scaled condition " << cond
            << ")";
        throw NumericalError(msg.str());
    }
    InvertedPoroMatrix<Scalar> out;
    out.inverse = equilibrated_inverse(A);
    auto &cf = out.compliance_form;
    cf.compliance = out.inverse.template topLeftCorner<6, 6>();
    cf.hooke_constant = out.inverse(6, 6);
    if (!(cf.hooke_constant > Scalar(0)))
        throw NumericalError("compliance form has non-positive Hooke constant");
    cf.skempton = Scalar(3) * out.inverse.template topRightCorner<6, 1>() / cf.hooke_constant;
    return out;
}

// U = 1/2 kappa . gamma = 1/2 (sigma:eps + p zeta).
template <typename Scalar>
Scalar strain_energy(const KappaVector7<Scalar> &k, const GammaVector7<Scalar> &g) {
    return Scalar(0.5) * (k.stress.dot(g.strain) + k.fluid_content * g.pressure);
}

} // namespace porobound
