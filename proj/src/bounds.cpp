#include "porobound/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

namespace porobound {

namespace {

// Runs fn(0..count-1) on up to `threads` workers. Results are written by
// index so the outcome does not depend on completion order. The first
// exception (lowest index) is rethrown.
template <typename Fn>
void parallel_for(int count, unsigned threads, Fn &&fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, unsigned(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[std::size_t(i)] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

double max_abs(const Vector6<double> &v) { return v.cwiseAbs().maxCoeff(); }

} // namespace

std::array<GammaVector7d, 7> canonical_gamma_cases() {
    std::array<GammaVector7d, 7> cases;
    for (int k = 0; k < 7; ++k) cases[std::size_t(k)] = GammaVector7d::from(Vector7<double>::Unit(k));
    return cases;
}

std::array<KappaVector7d, 7> canonical_kappa_cases() {
    std::array<KappaVector7d, 7> cases;
    for (int k = 0; k < 7; ++k) cases[std::size_t(k)] = KappaVector7d::from(Vector7<double>::Unit(k));
    return cases;
}

BoundEstimate upper_bound(const Microstructure &m, const SolverOptions &options,
                          ParallelOptions parallel) {
    const auto loads = canonical_gamma_cases();
    BoundEstimate out;
    out.matrix.setZero();
    out.cases.resize(7);
    parallel_for(7, parallel.threads, [&](int k) {
        const auto t0 = std::chrono::steady_clock::now();
        FieldSolution sol;
        try {
            sol = solve_displacement_pressure_case(m, loads[std::size_t(k)], options);
        } catch (const SolverDivergedError &e) {
            throw SolverDivergedError("displacement-pressure case " + std::to_string(k + 1) +
                                          ": " + e.what(),
                                      e.residual_history());
        }
        out.matrix.col(k) = average_kappa(sol).stacked();

        const auto strain = average_strain(sol);
        auto &d = out.cases[std::size_t(k)];
        d.family = LoadFamily::displacement_pressure;
        d.index = k + 1;
        d.residual = sol.residual_norm;
        d.iterations = sol.iterations;
        d.averaging_deviation = max_abs(strain.volume - loads[std::size_t(k)].strain);
        d.surface_volume_gap = max_abs(strain.surface - strain.volume);
        d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    return out;
}

BoundEstimate lower_bound(const Microstructure &m, const SolverOptions &options,
                          ParallelOptions parallel) {
    const auto loads = canonical_kappa_cases();
    PoroMatrix7d compliance = PoroMatrix7d::Zero();
    BoundEstimate out;
    out.cases.resize(7);
    parallel_for(7, parallel.threads, [&](int k) {
        const auto t0 = std::chrono::steady_clock::now();
        FieldSolution sol;
        try {
            sol = solve_traction_fluid_content_case(m, loads[std::size_t(k)], options);
        } catch (const SolverDivergedError &e) {
            throw SolverDivergedError("traction-fluid-content case " + std::to_string(k + 1) +
                                          ": " + e.what(),
                                      e.residual_history());
        }
        compliance.col(k) = average_gamma(sol).stacked();

        const auto stress = average_stress(sol);
        auto &d = out.cases[std::size_t(k)];
        d.family = LoadFamily::traction_fluid_content;
        d.index = k + 1;
        d.residual = sol.residual_norm;
        d.iterations = sol.iterations;
        d.averaging_deviation = max_abs(stress.volume - loads[std::size_t(k)].stress);
        d.surface_volume_gap = max_abs(stress.surface - stress.volume);
        d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    const double cond = scaled_condition_number(compliance);
    if (!(cond <= 1e12)) {
        std::ostringstream msg;
        msg << "effective compliance is near-singular (scaled condition " << cond << ")";
        throw NumericalError(msg.str());
    }
    out.matrix = equilibrated_inverse(compliance);
    return out;
}

PoroMatrix7d voigt_estimate(const Microstructure &m) {
    const auto phi = volume_fractions(m);
    PoroMatrix7d acc = PoroMatrix7d::Zero();
    for (std::size_t p = 0; p < phi.size(); ++p) acc += phi[p] * assemble_A(m.phases()[p]);
    return acc;
}

PoroMatrix7d reuss_estimate(const Microstructure &m) {
    const auto phi = volume_fractions(m);
    PoroMatrix7d acc = PoroMatrix7d::Zero();
    for (std::size_t p = 0; p < phi.size(); ++p) {
        if (phi[p] == 0.0) continue;
        acc += phi[p] * invert_A(assemble_A(m.phases()[p])).inverse;
    }
    const double cond = scaled_condition_number(acc);
    if (!(cond <= 1e14)) throw NumericalError("averaged phase compliance is singular");
    return equilibrated_inverse(acc);
}

OrderingMargins ordering_check(const PoroMatrix7d &stiffer, const PoroMatrix7d &softer) {
    const Matrix6<double> gap = stiffer.topLeftCorner<6, 6>() - softer.topLeftCorner<6, 6>();
    const Matrix6<double> sym = 0.5 * (gap + gap.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix6<double>> es(sym, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), stiffer(6, 6) - softer(6, 6)};
}

EffectiveBiot effective_biot(const PoroMatrix7d &a) {
    const Vector6<double> col = a.topRightCorner<6, 1>();
    const Vector6<double> row = a.bottomLeftCorner<1, 6>().transpose();
    return {0.5 * (row - col), (col + row).cwiseAbs().maxCoeff()};
}

BoundsResult compute_bounds(const Microstructure &m, const BoundsConfig &config) {
    BoundsResult result;
    if (config.upper) {
        result.a_voigt = voigt_estimate(m);
        auto est = upper_bound(m, config.solver, config.parallel);
        result.a_upper = est.matrix;
        result.cases.insert(result.cases.end(), est.cases.begin(), est.cases.end());
    }
    if (config.lower) {
        result.a_reuss = reuss_estimate(m);
        auto est = lower_bound(m, config.solver, config.parallel);
        result.a_lower = est.matrix;
        result.cases.insert(result.cases.end(), est.cases.begin(), est.cases.end());
    }
    if (result.a_upper && result.a_lower) {
        result.ordering = ordering_check(*result.a_upper, *result.a_lower);
        result.sandwich = SandwichMargins{ordering_check(*result.a_voigt, *result.a_upper),
                                          *result.ordering,
                                          ordering_check(*result.a_lower, *result.a_reuss)};
    }
    return result;
}

} // namespace porobound
