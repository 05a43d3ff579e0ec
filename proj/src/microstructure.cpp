#include "porobound/microstructure.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace porobound {

namespace {

using json = nlohmann::json;

int wrap(int v, int n) {
    int r = v % n;
    return r < 0 ? r + n : r;
}

// Counts phase pairs (x, x + r) over a box of the grid, periodic within the box.
Eigen::MatrixXd pair_counts(const Microstructure &m, const GridDims &origin, const GridDims &box,
                            const Shift &r) {
    const int np = m.num_phases();
    std::vector<long long> counts(std::size_t(np) * np, 0);
    const Shift s{wrap(r[0], box[0]), wrap(r[1], box[1]), wrap(r[2], box[2])};
    for (int k = 0; k < box[2]; ++k) {
        const int k2 = (k + s[2]) % box[2];
        for (int j = 0; j < box[1]; ++j) {
            const int j2 = (j + s[1]) % box[1];
            for (int i = 0; i < box[0]; ++i) {
                const int i2 = (i + s[0]) % box[0];
                const int a = m.phase_at(origin[0] + i, origin[1] + j, origin[2] + k);
                const int b = m.phase_at(origin[0] + i2, origin[1] + j2, origin[2] + k2);
                ++counts[std::size_t(a) * np + b];
            }
        }
    }
    const double total = double(box[0]) * box[1] * box[2];
    Eigen::MatrixXd p(np, np);
    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) p(a, b) = double(counts[std::size_t(a) * np + b]) / total;
    return p;
}

template <std::size_t N>
std::array<double, N> fixed_floats(const json &j, const char *key) {
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    const auto &v = j.at(key);
    if (!v.is_array() || v.size() != N)
        throw InputError(std::string("field '") + key + "' must be an array of " +
                         std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number())
            throw InputError(std::string("field '") + key + "' contains a non-number");
        out[i] = v[i].get<double>();
    }
    return out;
}

PoroelasticMateriald parse_material(const json &j, std::size_t index) {
    if (!j.is_object()) throw InputError("phase " + std::to_string(index) + " is not an object");
    try {
        const auto s = fixed_floats<36>(j, "stiffness");
        const auto a = fixed_floats<6>(j, "biot_alpha");
        if (!j.contains("biot_modulus_pa") || !j.at("biot_modulus_pa").is_number())
            throw InputError("missing numeric field 'biot_modulus_pa'");
        PoroelasticMateriald m;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) m.stiffness(r, c) = s[std::size_t(r) * 6 + c];
        for (int r = 0; r < 6; ++r) m.biot_alpha[r] = a[std::size_t(r)];
        m.biot_modulus = j.at("biot_modulus_pa").get<double>();
        return m;
    } catch (const InputError &e) {
        throw InputError("phase " + std::to_string(index) + ": " + e.what());
    }
}

std::vector<int> read_raw_voxels(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open voxel file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return {bytes.begin(), bytes.end()};
}

} // namespace

Microstructure::Microstructure(GridDims dims, Spacing spacing, std::vector<int> phase_of,
                               std::vector<PoroelasticMateriald> phases)
    : m_dims(dims), m_spacing(spacing), m_phase_of(std::move(phase_of)),
      m_phases(std::move(phases)) {
    for (int d = 0; d < 3; ++d) {
        if (m_dims[d] <= 0) throw InputError("grid dimensions must be positive");
        if (!(m_spacing[d] > 0) || !std::isfinite(m_spacing[d]))
            throw InputError("voxel spacing must be positive and finite");
    }
    const std::size_t expected = std::size_t(m_dims[0]) * m_dims[1] * m_dims[2];
    if (m_phase_of.size() != expected) {
        std::ostringstream msg;
        msg << "dimension mismatch: dims declare " << expected << " voxels, got "
            << m_phase_of.size();
        throw InputError(msg.str());
    }
    if (m_phases.empty()) throw InputError("microstructure has no phases");
    for (std::size_t v = 0; v < m_phase_of.size(); ++v) {
        const int p = m_phase_of[v];
        if (p < 0 || p >= int(m_phases.size()))
            throw InputError("unknown phase id " + std::to_string(p) + " at voxel " +
                             std::to_string(v));
    }
    for (std::size_t p = 0; p < m_phases.size(); ++p) {
        auto report = validate_material(m_phases[p]);
        if (!report.ok())
            throw InputError("phase " + std::to_string(p) + ": " + report.failures.front());
    }
}

RveDocument parse_rve_document(const std::string &text, const std::filesystem::path &base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw InputError(std::string("parse error: ") + e.what());
    }
    if (!j.is_object()) throw InputError("RVE document must be an object");

    RveDocument doc;
    const auto dims = fixed_floats<3>(j, "dims");
    for (int d = 0; d < 3; ++d) {
        if (dims[d] != std::floor(dims[d]) || dims[d] < 1 || dims[d] > 1e6)
            throw InputError("dims must be positive integers");
        doc.dims[d] = int(dims[d]);
    }
    doc.spacing = fixed_floats<3>(j, "spacing_m");

    if (!j.contains("phases") || !j.at("phases").is_array())
        throw InputError("missing array field 'phases'");
    const auto &phases = j.at("phases");
    for (std::size_t p = 0; p < phases.size(); ++p) doc.phases.push_back(parse_material(phases[p], p));

    if (!j.contains("voxels")) throw InputError("missing field 'voxels'");
    const auto &vox = j.at("voxels");
    if (vox.is_string()) {
        doc.voxels = read_raw_voxels(base_dir / vox.get<std::string>());
    } else if (vox.is_array()) {
        doc.voxels.reserve(vox.size());
        for (const auto &v : vox) {
            if (!v.is_number_integer()) throw InputError("voxel entries must be integers");
            doc.voxels.push_back(v.get<int>());
        }
    } else {
        throw InputError("field 'voxels' must be an integer array or a relative path");
    }

    const std::size_t expected = std::size_t(doc.dims[0]) * doc.dims[1] * doc.dims[2];
    if (doc.voxels.size() != expected) {
        std::ostringstream msg;
        msg << "dimension mismatch: dims declare " << expected << " voxels, got "
            << doc.voxels.size();
        throw InputError(msg.str());
    }
    return doc;
}

RveDocument read_rve_document(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open RVE file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_rve_document(buf.str(), path.parent_path());
}

Microstructure to_microstructure(RveDocument doc) {
    return Microstructure(doc.dims, doc.spacing, std::move(doc.voxels), std::move(doc.phases));
}

Microstructure load_rve(const std::filesystem::path &path) {
    return to_microstructure(read_rve_document(path));
}

std::string dump_rve(const Microstructure &m) {
    json j;
    j["dims"] = m.dims();
    j["spacing_m"] = m.spacing();
    j["phases"] = json::array();
    for (const auto &mat : m.phases()) {
        json p;
        std::vector<double> s;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) s.push_back(mat.stiffness(r, c));
        p["stiffness"] = s;
        p["biot_alpha"] = std::vector<double>(mat.biot_alpha.data(), mat.biot_alpha.data() + 6);
        p["biot_modulus_pa"] = mat.biot_modulus;
        j["phases"].push_back(p);
    }
    j["voxels"] = m.phase_of();
    return j.dump();
}

std::vector<double> volume_fractions(const Microstructure &m) {
    std::vector<long long> counts(std::size_t(m.num_phases()), 0);
    for (int p : m.phase_of()) ++counts[std::size_t(p)];
    std::vector<double> out(counts.size());
    const double total = double(m.num_voxels());
    for (std::size_t p = 0; p < counts.size(); ++p) out[p] = double(counts[p]) / total;
    return out;
}

TwoPointTable two_point_probability(const Microstructure &m, const Shift &shift) {
    return {shift, pair_counts(m, {0, 0, 0}, m.dims(), shift)};
}

HomogeneityReport homogeneity_score(const Microstructure &m, int subdivisions,
                                    std::span<const Shift> shifts) {
    if (subdivisions < 2) throw InputError("subdivisions must be at least 2");
    const auto &dims = m.dims();
    GridDims box{};
    for (int d = 0; d < 3; ++d) {
        if (dims[d] % subdivisions != 0) {
            std::ostringstream msg;
            msg << "grid dimension " << dims[d] << " is not divisible by " << subdivisions
                << " subdivisions";
            throw InputError(msg.str());
        }
        box[d] = dims[d] / subdivisions;
    }

    HomogeneityReport report;
    report.subdivisions = subdivisions;
    report.shifts.assign(shifts.begin(), shifts.end());
    for (const auto &r : shifts) {
        const Eigen::MatrixXd whole = pair_counts(m, {0, 0, 0}, dims, r);
        double worst = 0;
        for (int wz = 0; wz < subdivisions; ++wz)
            for (int wy = 0; wy < subdivisions; ++wy)
                for (int wx = 0; wx < subdivisions; ++wx) {
                    const GridDims origin{wx * box[0], wy * box[1], wz * box[2]};
                    const Eigen::MatrixXd local = pair_counts(m, origin, box, r);
                    worst = std::max(worst, (local - whole).cwiseAbs().maxCoeff());
                }
        report.per_shift.push_back(worst);
        report.score = std::max(report.score, worst);
    }
    return report;
}

} // namespace porobound
