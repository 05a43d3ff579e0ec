#include "doctest.h"

#include "json.hpp"
#include "porobound/microstructure.hpp"
#include "test_support.hpp"

using namespace porobound;
using testing::Rng;

namespace {

std::vector<PoroelasticMateriald> two_phases() {
    return {testing::isotropic_material(1, 1, 0.5, 1), testing::isotropic_material(10, 10, 0.2, 10)};
}

// Independent count of P[a][b](r) by direct iteration with explicit wrap.
Eigen::MatrixXd brute_two_point(const Microstructure &m, const Shift &r) {
    const auto &d = m.dims();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m.num_phases(), m.num_phases());
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const int i2 = ((i + r[0]) % d[0] + d[0]) % d[0];
                const int j2 = ((j + r[1]) % d[1] + d[1]) % d[1];
                const int k2 = ((k + r[2]) % d[2] + d[2]) % d[2];
                p(m.phase_at(i, j, k), m.phase_at(i2, j2, k2)) += 1;
            }
    return p / double(m.num_voxels());
}

} // namespace

TEST_CASE("load_rve") {
    using nlohmann::json;
    const auto mat = testing::isotropic_material(1, 1, 0.5, 1);
    json phase;
    std::vector<double> s;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) s.push_back(mat.stiffness(r, c));
    phase["stiffness"] = s;
    phase["biot_alpha"] = {0.5, 0.5, 0.5, 0, 0, 0};
    phase["biot_modulus_pa"] = 1.0;

    SUBCASE("single phase 2x2x2") {
        json doc = {{"dims", {2, 2, 2}}, {"spacing_m", {1e-3, 1e-3, 1e-3}},
                    {"phases", {phase}}, {"voxels", std::vector<int>(8, 0)}};
        const auto path = testing::temp_path("single.json");
        testing::write_text(path, doc.dump());
        const auto m = load_rve(path);
        CHECK(volume_fractions(m) == std::vector<double>{1.0});
        CHECK(m.volume() == doctest::Approx(8e-9));
    }
    SUBCASE("checkerboard from a raw uint8 payload") {
        const GridDims d{4, 4, 4};
        const auto cb = testing::checkerboard(d);
        const auto raw = testing::temp_path("checker.raw");
        std::string bytes(cb.begin(), cb.end());
        testing::write_text(raw, bytes);
        json doc = {{"dims", {4, 4, 4}}, {"spacing_m", {1, 1, 1}},
                    {"phases", {phase, phase}}, {"voxels", "checker.raw"}};
        const auto path = testing::temp_path("checker.json");
        testing::write_text(path, doc.dump());
        const auto m = load_rve(path);
        CHECK(m.phase_of() == cb);
        CHECK(volume_fractions(m) == std::vector<double>{0.5, 0.5});
    }
    SUBCASE("errors") {
        json doc = {{"dims", {2, 2, 2}}, {"spacing_m", {1, 1, 1}},
                    {"phases", {phase}}, {"voxels", std::vector<int>(7, 0)}};
        CHECK_THROWS_WITH_AS(parse_rve_document(doc.dump()), doctest::Contains("dimension mismatch"),
                             InputError);

        doc["voxels"] = std::vector<int>{0, 0, 0, 0, 0, 0, 0, 3};
        CHECK_THROWS_WITH_AS(to_microstructure(parse_rve_document(doc.dump())),
                             doctest::Contains("unknown phase id"), InputError);

        doc["voxels"] = std::vector<int>(8, 0);
        doc["phases"][0]["biot_modulus_pa"] = -1.0;
        CHECK_THROWS_AS(to_microstructure(parse_rve_document(doc.dump())), InputError);

        CHECK_THROWS_WITH_AS(parse_rve_document("{\"dims\": [1,2"), doctest::Contains("parse error"),
                             InputError);
        doc["phases"][0]["stiffness"] = std::vector<double>(35, 1.0);
        CHECK_THROWS_AS(parse_rve_document(doc.dump()), InputError);
        CHECK_THROWS_AS(load_rve(testing::temp_path("does-not-exist.json")), InputError);
    }
    SUBCASE("dump and reload") {
        Rng rng(5);
        const Microstructure m({3, 2, 4}, {0.5, 1, 2}, testing::random_phases(rng, 24, 2), two_phases());
        const auto back = to_microstructure(parse_rve_document(dump_rve(m)));
        CHECK(back.phase_of() == m.phase_of());
        CHECK(back.spacing() == m.spacing());
        CHECK(back.phases()[1].stiffness == m.phases()[1].stiffness);
    }
}

TEST_CASE("volume_fractions") {
    CHECK(volume_fractions(Microstructure({2, 2, 2}, {1, 1, 1}, std::vector<int>(8, 0),
                                          {two_phases()[0]})) == std::vector<double>{1.0});
    const Microstructure laminate({1, 1, 8}, {1, 1, 1}, {0, 1, 0, 0, 1, 0, 1, 0}, two_phases());
    CHECK(volume_fractions(laminate) == std::vector<double>{0.625, 0.375});
    const Microstructure cb({4, 4, 4}, {1, 1, 1}, testing::checkerboard({4, 4, 4}), two_phases());
    CHECK(volume_fractions(cb) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("two_point_probability") {
    const Microstructure cb({4, 4, 4}, {1, 1, 1}, testing::checkerboard({4, 4, 4}), two_phases());
    Eigen::Matrix2d expect0, expect1;
    expect0 << 0.5, 0, 0, 0.5;
    expect1 << 0, 0.5, 0.5, 0;
    CHECK(two_point_probability(cb, {0, 0, 0}).prob == expect0);
    CHECK(two_point_probability(cb, {1, 0, 0}).prob == expect1);
    CHECK(brute_two_point(cb, {1, 0, 0}) == expect1);

    const Microstructure single({3, 3, 3}, {1, 1, 1}, std::vector<int>(27, 0), {two_phases()[0]});
    CHECK(two_point_probability(single, {2, -5, 7}).prob == Eigen::MatrixXd::Ones(1, 1));
}

TEST_CASE("two-point table invariants on random grids") {
    Rng rng(77);
    for (int t = 0; t < 25; ++t) {
        const GridDims d{1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6)};
        const int np = 1 + rng.below(3);
        std::vector<PoroelasticMateriald> phases(std::size_t(np), two_phases()[0]);
        const std::size_t n = std::size_t(d[0]) * d[1] * d[2];
        const Microstructure m(d, {1, 1, 1}, testing::random_phases(rng, n, np), phases);
        const auto phi = volume_fractions(m);

        const auto p0 = two_point_probability(m, {0, 0, 0}).prob;
        for (int a = 0; a < np; ++a)
            for (int b = 0; b < np; ++b) CHECK(p0(a, b) == (a == b ? phi[std::size_t(a)] : 0.0));

        for (int s = 0; s < 5; ++s) {
            const Shift r{rng.below(13) - 6, rng.below(13) - 6, rng.below(13) - 6};
            const auto p = two_point_probability(m, r).prob;
            const auto pm = two_point_probability(m, {-r[0], -r[1], -r[2]}).prob;
            CHECK(std::abs(p.sum() - 1.0) < 1e-12);
            CHECK(p == pm.transpose());
            CHECK((p - brute_two_point(m, r)).cwiseAbs().maxCoeff() < 1e-15);

            // Cyclic translation of the voxel array leaves the estimator unchanged.
            const Shift t3{rng.below(d[0]), rng.below(d[1]), rng.below(d[2])};
            std::vector<int> moved(n);
            for (int k = 0; k < d[2]; ++k)
                for (int j = 0; j < d[1]; ++j)
                    for (int i = 0; i < d[0]; ++i)
                        moved[m.voxel_index((i + t3[0]) % d[0], (j + t3[1]) % d[1], (k + t3[2]) % d[2])] =
                            m.phase_at(i, j, k);
            const Microstructure shifted(d, {1, 1, 1}, moved, phases);
            CHECK(two_point_probability(shifted, r).prob == p);
        }
    }
}

TEST_CASE("homogeneity_score") {
    const std::vector<Shift> shifts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 1}};

    const Microstructure single({4, 4, 4}, {1, 1, 1}, std::vector<int>(64, 0), {two_phases()[0]});
    CHECK(homogeneity_score(single, 2, shifts).score == 0.0);

    const Microstructure cb({8, 8, 8}, {1, 1, 1}, testing::checkerboard({8, 8, 8}), two_phases());
    const std::vector<Shift> x_only = {{1, 0, 0}};
    CHECK(homogeneity_score(cb, 2, x_only).score == 0.0);
    CHECK(homogeneity_score(cb, 2, shifts).score == 0.0);

    // Upper half in z is phase 1: each window is pure, the whole grid is 50/50.
    std::vector<int> graded(512);
    for (int k = 0; k < 8; ++k)
        for (int v = 0; v < 64; ++v) graded[std::size_t(k * 64 + v)] = k >= 4 ? 1 : 0;
    const Microstructure g({8, 8, 8}, {1, 1, 1}, graded, two_phases());
    const std::vector<Shift> zero = {{0, 0, 0}};
    const auto rep = homogeneity_score(g, 2, zero);
    CHECK(rep.score >= 0.4);
    CHECK(rep.score == 0.5); // |1 - 0.5| on the diagonal

    // Exactly periodic with a period dividing the window size.
    Rng rng(9);
    std::vector<int> cell = testing::random_phases(rng, 8, 2);
    std::vector<int> tiled(512);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) tiled[std::size_t(i + 8 * (j + 8 * k))] = cell[std::size_t((i % 2) + 2 * ((j % 2) + 2 * (k % 2)))];
    const Microstructure periodic({8, 8, 8}, {1, 1, 1}, tiled, two_phases());
    CHECK(homogeneity_score(periodic, 2, shifts).score == 0.0);
    CHECK(homogeneity_score(periodic, 4, shifts).score == 0.0);

    CHECK_THROWS_AS(homogeneity_score(cb, 3, shifts), InputError);
    CHECK_THROWS_AS(homogeneity_score(cb, 1, shifts), InputError);
}
