#include "doctest.h"

#include "porobound/bounds.hpp"
#include "test_support.hpp"

using namespace porobound;
using testing::Rng;

namespace {

double rel(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) { return (a - b).norm() / b.norm(); }

PoroelasticMateriald scaled(PoroelasticMateriald m, double s) {
    m.stiffness *= s;
    m.biot_modulus *= s;
    return m;
}

Microstructure scaled(const Microstructure &m, double s) {
    std::vector<PoroelasticMateriald> phases;
    for (const auto &p : m.phases()) phases.push_back(scaled(p, s));
    return Microstructure(m.dims(), m.spacing(), m.phase_of(), phases);
}

} // namespace

TEST_CASE("canonical cases are the unit vectors") {
    const auto g = canonical_gamma_cases();
    const auto k = canonical_kappa_cases();
    for (int i = 0; i < 7; ++i) {
        CHECK(g[std::size_t(i)].stacked() == Vector7<double>::Unit(i));
        CHECK(k[std::size_t(i)].stacked() == Vector7<double>::Unit(i));
    }
}

TEST_CASE("homogeneous RVE: every estimate is the phase matrix") {
    Rng rng(201);
    const auto mat = testing::random_material(rng, 3.0);
    const Microstructure m({4, 4, 4}, {0.1, 0.2, 0.3}, std::vector<int>(64, 0), {mat});
    const auto r = compute_bounds(m);
    const PoroMatrix7d A = assemble_A(mat);
    CHECK(rel(*r.a_upper, A) < 1e-9);
    CHECK(rel(*r.a_lower, A) < 1e-9);
    CHECK(rel(*r.a_voigt, A) < 1e-14);
    CHECK(rel(*r.a_reuss, A) < 1e-12);
    CHECK(r.ordering->min() > -1e-9 * A.norm());
    CHECK(r.cases.size() == 14);

    const auto biot = effective_biot(*r.a_upper);
    CHECK((biot.alpha - mat.biot_alpha).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(biot.mismatch < 1e-9);
}

TEST_CASE("Voigt and Reuss") {
    Rng rng(202);
    const auto m = testing::random_two_phase_rve(rng, 4);
    const auto phi = volume_fractions(m);
    const auto &ph = m.phases();

    const PoroMatrix7d voigt = voigt_estimate(m);
    PoroMatrix7d mean = phi[0] * assemble_A(ph[0]) + phi[1] * assemble_A(ph[1]);
    CHECK((voigt - mean).cwiseAbs().maxCoeff() < 1e-14 * mean.norm());
    CHECK(voigt(6, 6) == doctest::Approx(phi[0] / ph[0].biot_modulus + phi[1] / ph[1].biot_modulus));

    const Eigen::MatrixXd inv_mean = phi[0] * testing::gauss_jordan_inverse(assemble_A(ph[0])) +
                                     phi[1] * testing::gauss_jordan_inverse(assemble_A(ph[1]));
    const PoroMatrix7d reuss = reuss_estimate(m);
    CHECK(rel(reuss, testing::gauss_jordan_inverse(inv_mean)) < 1e-12);

    const auto margins = ordering_check(voigt, reuss);
    CHECK(margins.stiffness_block > 0);
}

TEST_CASE("ordering_check reads the stiffness block and the storage entry") {
    PoroMatrix7d a = PoroMatrix7d::Identity(), b = PoroMatrix7d::Identity();
    a(0, 6) = 100;
    b(6, 0) = -100;
    auto margins = ordering_check(a, b);
    CHECK(margins.stiffness_block == 0.0);
    CHECK(margins.storage_entry == 0.0);
    b(6, 6) = 3;
    b(1, 1) = 1.5;
    margins = ordering_check(a, b);
    CHECK(margins.storage_entry == -2.0);
    CHECK(margins.stiffness_block == doctest::Approx(-0.5));
    CHECK(margins.min() == -2.0);
}

TEST_CASE("z-laminate against one-dimensional oracles") {
    const auto soft = testing::layer_material(1.0, 1.0, 0.9, 1.0);
    const auto stiff = testing::layer_material(10.0, 8.0, 0.3, 10.0);
    const std::vector<int> layers = {0, 1, 0, 0, 1, 0, 1, 0};
    const Microstructure m({1, 1, 8}, {1, 1, 1}, layers, {soft, stiff});
    const auto r = compute_bounds(m);

    std::vector<PoroelasticMateriald> column;
    for (int id : layers) column.push_back(m.phases()[std::size_t(id)]);
    const auto under_stress = testing::laminate_column(column, 1.0, 1.0, 0.0);
    const auto under_fluid = testing::laminate_column(column, 1.0, 0.0, 1.0);

    const Eigen::MatrixXd compliance = testing::gauss_jordan_inverse(*r.a_lower);
    CHECK(compliance(2, 2) == doctest::Approx(under_stress.mean_strain).epsilon(1e-6));
    CHECK(compliance(6, 2) == doctest::Approx(under_stress.mean_pressure).epsilon(1e-6));
    CHECK(compliance(2, 6) == doctest::Approx(under_fluid.mean_strain).epsilon(1e-6));
    CHECK(compliance(6, 6) == doctest::Approx(under_fluid.mean_pressure).epsilon(1e-6));

    // Every node of a one-voxel column is on the boundary: uniform strain.
    const double f0 = 5.0 / 8.0, f1 = 3.0 / 8.0;
    for (int i : {0, 1, 5})
        for (int j : {0, 1, 5}) {
            const double mean = f0 * soft.stiffness(i, j) + f1 * stiff.stiffness(i, j);
            CHECK((*r.a_upper)(i, j) == doctest::Approx(mean).epsilon(1e-6));
        }
    CHECK((*r.a_upper)(6, 6) == doctest::Approx(f0 / 1.0 + f1 / 10.0).epsilon(1e-6));
}

TEST_CASE("bound columns are the averaged case responses") {
    Rng rng(203);
    const auto m = testing::random_two_phase_rve(rng, 4);
    const auto up = upper_bound(m);
    const auto lo = lower_bound(m);
    const auto gamma_cases = canonical_gamma_cases();
    const auto kappa_cases = canonical_kappa_cases();
    Eigen::Matrix<double, 7, 7> compliance;
    for (int k = 0; k < 7; ++k) {
        const auto dp = solve_displacement_pressure_case(m, gamma_cases[std::size_t(k)]);
        CHECK((up.matrix.col(k) - average_kappa(dp).stacked()).cwiseAbs().maxCoeff() < 1e-12);
        const auto tf = solve_traction_fluid_content_case(m, kappa_cases[std::size_t(k)]);
        compliance.col(k) = average_gamma(tf).stacked();
        CHECK(up.cases[std::size_t(k)].index == k + 1);
        CHECK(up.cases[std::size_t(k)].averaging_deviation < 1e-10);
        CHECK(lo.cases[std::size_t(k)].averaging_deviation < 1e-9);
    }
    CHECK(rel(lo.matrix, testing::gauss_jordan_inverse(compliance)) < 1e-12);
}

TEST_CASE("bounds are equivariant under stiffness scaling and invariant under spacing") {
    Rng rng(204);
    const auto m = testing::random_two_phase_rve(rng, 4);
    const auto base = compute_bounds(m);

    const double s = 1e3;
    const auto big = compute_bounds(scaled(m, s));
    Eigen::Matrix<double, 7, 7> S = Eigen::Matrix<double, 7, 7>::Identity() * std::sqrt(s);
    S(6, 6) = 1 / std::sqrt(s);
    CHECK(rel(*big.a_upper, S * *base.a_upper * S) < 1e-8);
    CHECK(rel(*big.a_lower, S * *base.a_lower * S) < 1e-8);
    CHECK(rel(*big.a_reuss, S * *base.a_reuss * S) < 1e-12);

    const double c = 7.0;
    std::vector<PoroelasticMateriald> times_c;
    for (auto p : m.phases()) {
        p.stiffness *= c;
        p.biot_alpha *= c;
        p.biot_modulus /= c;
        times_c.push_back(p);
    }
    const auto linear = compute_bounds(Microstructure(m.dims(), m.spacing(), m.phase_of(), times_c));
    CHECK(rel(*linear.a_upper, c * *base.a_upper) < 1e-8);
    CHECK(rel(*linear.a_lower, c * *base.a_lower) < 1e-8);
    CHECK(rel(*linear.a_voigt, c * *base.a_voigt) < 1e-13);
    CHECK(rel(*linear.a_reuss, c * *base.a_reuss) < 1e-12);

    const Microstructure stretched(m.dims(), {1e-3, 1e-3, 1e-3}, m.phase_of(), m.phases());
    const auto small = compute_bounds(stretched);
    CHECK(rel(*small.a_upper, *base.a_upper) < 1e-8);
    CHECK(rel(*small.a_lower, *base.a_lower) < 1e-8);
}

TEST_CASE("results do not depend on the thread count") {
    Rng rng(205);
    const auto m = testing::random_two_phase_rve(rng, 4);
    BoundsConfig one, many;
    one.parallel.threads = 1;
    many.parallel.threads = 5;
    const auto a = compute_bounds(m, one);
    const auto b = compute_bounds(m, many);
    CHECK(*a.a_upper == *b.a_upper);
    CHECK(*a.a_lower == *b.a_lower);
}

TEST_CASE("family selection") {
    Rng rng(206);
    const auto m = testing::random_two_phase_rve(rng, 3);
    BoundsConfig cfg;
    cfg.lower = false;
    const auto r = compute_bounds(m, cfg);
    CHECK(r.a_upper.has_value());
    CHECK(r.a_voigt.has_value());
    CHECK_FALSE(r.a_lower.has_value());
    CHECK_FALSE(r.a_reuss.has_value());
    CHECK_FALSE(r.ordering.has_value());
    CHECK(r.cases.size() == 7);
}

TEST_CASE("solver failure propagates from the worker threads") {
    Rng rng(207);
    const auto m = testing::random_two_phase_rve(rng, 6);
    SolverOptions opt;
    opt.max_iter_factor = 0.02;
    CHECK_THROWS_AS(lower_bound(m, opt, {3}), SolverDivergedError);
}
