#include "porobound/report.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "porobound/bounds.hpp"

namespace porobound {

namespace {

using ojson = nlohmann::ordered_json;

void write_json(std::ostringstream &out, const ojson &j, int depth) {
    const std::string pad(std::size_t(2 * (depth + 1)), ' ');
    const std::string close_pad(std::size_t(2 * depth), ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            bool first = true;
            for (const auto &[key, value] : j.items()) {
                if (!first) out << ",\n";
                first = false;
                out << pad << ojson(key).dump() << ": ";
                write_json(out, value, depth + 1);
            }
            out << "\n" << close_pad << "}";
            return;
        }
        case ojson::value_t::array: {
            // Numeric arrays stay on one line.
            bool scalar = true;
            for (const auto &v : j) scalar = scalar && v.is_primitive();
            if (j.empty()) {
                out << "[]";
            } else if (scalar) {
                out << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out << ", ";
                    write_json(out, j[i], depth + 1);
                }
                out << "]";
            } else {
                out << "[\n";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out << ",\n";
                    out << pad;
                    write_json(out, j[i], depth + 1);
                }
                out << "\n" << close_pad << "]";
            }
            return;
        }
        case ojson::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out << "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf;
            return;
        }
        default:
            out << j.dump();
    }
}

ojson matrix_json(const Eigen::MatrixXd &a) {
    ojson j;
    j["rows"] = a.rows();
    j["cols"] = a.cols();
    std::vector<double> data;
    data.reserve(std::size_t(a.size()));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
    j["data"] = data;
    return j;
}

template <typename T>
ojson optional_matrix(const std::optional<T> &a) {
    return a ? matrix_json(*a) : ojson(nullptr);
}

ojson margins_json(const OrderingMargins &m) {
    ojson j;
    j["stiffness_block_min_eigenvalue"] = m.stiffness_block;
    j["storage_entry"] = m.storage_entry;
    return j;
}

ojson biot_json(const std::optional<PoroMatrix7d> &a) {
    if (!a) return nullptr;
    const auto b = effective_biot(*a);
    ojson j;
    j["alpha"] = std::vector<double>(b.alpha.data(), b.alpha.data() + 6);
    j["antisymmetry_mismatch"] = b.mismatch;
    return j;
}

ojson shifts_json(const std::vector<Shift> &shifts) {
    ojson arr = ojson::array();
    for (const auto &s : shifts) arr.push_back(s);
    return arr;
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open RVE file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ojson header(const RunConfig &cfg, const std::string &bytes) {
    ojson j;
    j["schema"] = kReportSchema;
    j["command"] = cfg.command;
    ojson c;
    c["input_path"] = cfg.input_path.string();
    if (cfg.command == "bounds") {
        c["bc_family"] = cfg.bc_family;
        c["solver_tol"] = cfg.solver_tol;
        c["max_iter_factor"] = cfg.max_iter_factor;
    }
    if (cfg.command != "validate") {
        c["subdivisions"] = cfg.subdivisions;
        c["shifts"] = shifts_json(cfg.shifts);
    }
    j["config"] = c;
    j["input_sha256"] = sha256_hex(bytes);
    return j;
}

RunOutcome run_validate(const RunConfig &cfg, const std::string &bytes) {
    RunOutcome out;
    ojson report = header(cfg, bytes);
    const RveDocument doc = parse_rve_document(bytes, cfg.input_path.parent_path());

    bool ok = true;
    ojson phases = ojson::array();
    for (std::size_t p = 0; p < doc.phases.size(); ++p) {
        const auto v = validate_material(doc.phases[p]);
        ojson entry;
        entry["index"] = p;
        entry["ok"] = v.ok();
        entry["symmetry_violation"] = v.symmetry_violation;
        entry["min_eigenvalue"] = v.min_eigenvalue;
        entry["biot_modulus_pa"] = v.biot_modulus;
        entry["failures"] = v.failures;
        for (const auto &f : v.failures) out.messages.push_back("phase " + std::to_string(p) + ": " + f);
        ok = ok && v.ok();
        phases.push_back(entry);
    }
    if (doc.phases.empty()) {
        ok = false;
        out.messages.push_back("no phases defined");
    }

    std::size_t unknown = 0;
    for (int id : doc.voxels)
        if (id < 0 || id >= int(doc.phases.size())) ++unknown;
    if (unknown) {
        ok = false;
        out.messages.push_back(std::to_string(unknown) + " voxels reference unknown phase ids");
    }
    ojson vox;
    vox["count"] = doc.voxels.size();
    vox["unknown_phase_ids"] = unknown;

    report["phases"] = phases;
    report["voxels"] = vox;
    report["ok"] = ok;
    out.report = format_report(report);
    out.exit_code = ok ? exit_ok : exit_input_error;
    return out;
}

RunOutcome run_stats(const RunConfig &cfg, const std::string &bytes) {
    RunOutcome out;
    ojson report = header(cfg, bytes);
    const Microstructure m = to_microstructure(parse_rve_document(bytes, cfg.input_path.parent_path()));
    report["volume_fractions"] = volume_fractions(m);
    ojson tables = ojson::array();
    for (const auto &s : cfg.shifts) {
        const auto t = two_point_probability(m, s);
        ojson entry;
        entry["shift"] = t.shift;
        entry["prob"] = matrix_json(t.prob);
        tables.push_back(entry);
    }
    report["two_point"] = tables;
    const auto h = homogeneity_score(m, cfg.subdivisions, cfg.shifts);
    ojson hj;
    hj["subdivisions"] = h.subdivisions;
    hj["per_shift"] = h.per_shift;
    hj["score"] = h.score;
    report["homogeneity"] = hj;
    out.report = format_report(report);
    return out;
}

RunOutcome run_bounds(const RunConfig &cfg, const std::string &bytes) {
    RunOutcome out;
    if (cfg.bc_family != "both" && cfg.bc_family != "displacement-pressure" &&
        cfg.bc_family != "traction-fluid-content")
        throw InputError("unknown boundary-condition family '" + cfg.bc_family + "'");
    const bool want_upper = cfg.bc_family != "traction-fluid-content";
    const bool want_lower = cfg.bc_family != "displacement-pressure";

    ojson report = header(cfg, bytes);
    const Microstructure m = to_microstructure(parse_rve_document(bytes, cfg.input_path.parent_path()));
    report["volume_fractions"] = volume_fractions(m);
    try {
        const auto h = homogeneity_score(m, cfg.subdivisions, cfg.shifts);
        ojson hj;
        hj["subdivisions"] = h.subdivisions;
        hj["per_shift"] = h.per_shift;
        hj["score"] = h.score;
        report["homogeneity"] = hj;
    } catch (const InputError &e) {
        report["homogeneity"] = nullptr;
        out.messages.push_back(std::string("homogeneity score skipped: ") + e.what());
    }

    SolverOptions solver;
    solver.tolerance = cfg.solver_tol;
    solver.max_iter_factor = cfg.max_iter_factor;
    const ParallelOptions parallel{cfg.threads};

    BoundsResult res;
    std::vector<std::string> failures;
    ojson timings;
    auto timed = [&](const char *name, auto &&fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        if (want_upper) {
            timed("voigt", [&] { res.a_voigt = voigt_estimate(m); });
            timed("upper", [&] {
                auto est = upper_bound(m, solver, parallel);
                res.a_upper = est.matrix;
                res.cases.insert(res.cases.end(), est.cases.begin(), est.cases.end());
            });
        }
        if (want_lower) {
            timed("reuss", [&] { res.a_reuss = reuss_estimate(m); });
            timed("lower", [&] {
                auto est = lower_bound(m, solver, parallel);
                res.a_lower = est.matrix;
                res.cases.insert(res.cases.end(), est.cases.begin(), est.cases.end());
            });
        }
    } catch (const NumericalError &e) {
        failures.push_back(e.what());
    }

    report["a_upper"] = optional_matrix(res.a_upper);
    report["a_lower"] = optional_matrix(res.a_lower);
    report["a_voigt"] = optional_matrix(res.a_voigt);
    report["a_reuss"] = optional_matrix(res.a_reuss);
    report["effective_biot_upper"] = biot_json(res.a_upper);
    report["effective_biot_lower"] = biot_json(res.a_lower);

    ojson cases = ojson::array();
    for (const auto &c : res.cases) {
        ojson cj;
        cj["family"] = to_string(c.family);
        cj["index"] = c.index;
        cj["residual"] = c.residual;
        cj["iterations"] = c.iterations;
        cj["averaging_deviation"] = c.averaging_deviation;
        cj["surface_volume_gap"] = c.surface_volume_gap;
        if (cfg.timings) cj["seconds"] = c.seconds;
        cases.push_back(cj);
    }
    report["cases"] = cases;

    if (res.a_upper && res.a_lower) {
        ojson ord;
        ord["voigt_minus_upper"] = margins_json(ordering_check(*res.a_voigt, *res.a_upper));
        ord["upper_minus_lower"] = margins_json(ordering_check(*res.a_upper, *res.a_lower));
        ord["lower_minus_reuss"] = margins_json(ordering_check(*res.a_lower, *res.a_reuss));
        report["ordering"] = ord;
    } else {
        report["ordering"] = nullptr;
    }
    if (cfg.timings) report["timings_s"] = timings;

    report["status"] = failures.empty() ? "ok" : "numerical_failure";
    report["errors"] = failures;
    out.report = format_report(report);
    out.messages.insert(out.messages.end(), failures.begin(), failures.end());
    out.exit_code = failures.empty() ? exit_ok : exit_numerical_failure;
    return out;
}

} // namespace

std::string sha256_hex(const std::string &bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("SHA-256 digest failed");
    static const char *hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string format_report(const nlohmann::ordered_json &doc) {
    std::ostringstream out;
    write_json(out, doc, 0);
    out << "\n";
    return out.str();
}

std::vector<Shift> parse_shifts(const std::string &text) {
    std::vector<Shift> shifts;
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        if (group.find_first_not_of(" \t") == std::string::npos) continue;
        std::stringstream parts(group);
        std::string part;
        Shift s{};
        int n = 0;
        while (std::getline(parts, part, ',')) {
            if (n == 3) throw InputError("shift '" + group + "' has more than 3 components");
            std::size_t used = 0;
            try {
                s[std::size_t(n)] = std::stoi(part, &used);
            } catch (const std::exception &) {
                throw InputError("malformed shift component '" + part + "'");
            }
            if (part.find_first_not_of(" \t", used) != std::string::npos)
                throw InputError("malformed shift component '" + part + "'");
            ++n;
        }
        if (n != 3) throw InputError("shift '" + group + "' must have 3 components");
        shifts.push_back(s);
    }
    if (shifts.empty()) throw InputError("no shifts given");
    return shifts;
}

unsigned threads_from_environment() {
    const char *v = std::getenv("POROBOUND_THREADS");
    if (!v || !*v) return 0;
    char *end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 0) throw InputError("POROBOUND_THREADS must be a non-negative integer");
    return unsigned(n);
}

RunOutcome run(const RunConfig &config) {
    RunOutcome out;
    try {
        if (!(config.solver_tol > 0)) throw InputError("--tol must be positive");
        if (!(config.max_iter_factor > 0)) throw InputError("iteration cap factor must be positive");
        if (config.input_path.empty()) throw InputError("input path is empty");
        const std::string bytes = read_file(config.input_path);
        if (config.command == "validate")
            out = run_validate(config, bytes);
        else if (config.command == "stats")
            out = run_stats(config, bytes);
        else if (config.command == "bounds")
            out = run_bounds(config, bytes);
        else
            throw InputError("unknown command '" + config.command + "'");
    } catch (const InputError &e) {
        out.exit_code = exit_input_error;
        out.messages.push_back(e.what());
    } catch (const NumericalError &e) {
        out.exit_code = exit_numerical_failure;
        out.messages.push_back(e.what());
    }

    if (!out.report.empty() && config.output_path) {
        std::ofstream file(*config.output_path, std::ios::binary);
        if (!file) {
            out.messages.push_back("cannot write report to " + config.output_path->string());
            if (out.exit_code == exit_ok) out.exit_code = exit_input_error;
        } else {
            file << out.report;
        }
    }
    return out;
}

} // namespace porobound
