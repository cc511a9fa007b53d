#include "em/states.hpp"

#include <cmath>
#include <utility>

#include <json.hpp>

namespace em {

namespace {

using nlohmann::json;

MatC pure_schmidt_mat(const SchmidtSpec& s) {
    const int d = static_cast<int>(s.lambdas.size());
    std::vector<cplx> psi(static_cast<std::size_t>(d) * d, 0.0);
    for (int j = 0; j < d; ++j) psi[static_cast<std::size_t>(j) * d + j] = std::sqrt(s.lambdas[j]);
    MatC rho(d * d, d * d);
    for (int i = 0; i < d * d; ++i)
        for (int j = 0; j < d * d; ++j) rho(i, j) = psi[i] * std::conj(psi[j]);
    return rho;
}

MatC phi_plus_mat(int d) {
    MatC rho(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rho(i * d + i, j * d + j) = 1.0 / d;
    return rho;
}

void require_local_dim(int d) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    if (d > 64) throw InvalidInput("d too large for this implementation");
}

void require_weight(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput(std::string(what) + " out of range [0,1]");
}

double json_number(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number())
        throw InvalidInput(std::string("missing or non-numeric field: ") + field);
    return j[field].get<double>();
}

int json_int(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number_integer())
        throw InvalidInput(std::string("missing or non-integer field: ") + field);
    return j[field].get<int>();
}

std::vector<double> json_number_array(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_array())
        throw InvalidInput(std::string("missing or non-array field: ") + field);
    std::vector<double> out;
    for (const auto& v : j[field]) {
        if (!v.is_number()) throw InvalidInput(std::string("non-numeric entry in ") + field);
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> json_matrix(const json& j, const char* field, int rows, int cols) {
    if (!j.contains(field) || !j[field].is_array())
        throw InvalidInput(std::string("missing or non-array field: ") + field);
    const auto& arr = j[field];
    if (static_cast<int>(arr.size()) != rows)
        throw InvalidInput(std::string(field) + " row count does not match dimensions");
    std::vector<std::vector<double>> out;
    for (const auto& row : arr) {
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw InvalidInput(std::string(field) + " column count does not match dimensions");
        std::vector<double> r;
        for (const auto& v : row) {
            if (!v.is_number()) throw InvalidInput(std::string("non-numeric entry in ") + field);
            r.push_back(v.get<double>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

StateSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("state spec must be a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw InvalidInput("state spec missing string field: kind");
    const std::string kind = j["kind"].get<std::string>();
    StateSpec s;
    if (kind == "pure_schmidt") {
        s.kind = StateKind::pure_schmidt;
        s.schmidt.lambdas = json_number_array(j, "lambdas");
    } else if (kind == "max_entangled") {
        s.kind = StateKind::max_entangled;
        s.d = json_int(j, "d");
    } else if (kind == "werner" || kind == "isotropic" || kind == "cna") {
        s.kind = kind == "werner" ? StateKind::werner
               : kind == "isotropic" ? StateKind::isotropic : StateKind::cna;
        s.d = json_int(j, "d");
        s.x = json_number(j, "x");
    } else if (kind == "dense") {
        s.kind = StateKind::dense;
        s.dA = json_int(j, "dA");
        s.dB = json_int(j, "dB");
        if (s.dA < 2 || s.dB < 2) throw InvalidInput("dA and dB must be at least 2");
        const int n = s.dA * s.dB;
        s.re = json_matrix(j, "re", n, n);
        s.im = json_matrix(j, "im", n, n);
    } else if (kind == "ensemble") {
        s.kind = StateKind::ensemble;
        s.weights = json_number_array(j, "weights");
        if (!j.contains("members") || !j["members"].is_array())
            throw InvalidInput("missing or non-array field: members");
        for (const auto& m : j["members"]) {
            StateSpec ms = spec_from_json(m);
            if (ms.kind != StateKind::pure_schmidt)
                throw InvalidInput("ensemble members must be pure_schmidt specs");
            s.members.push_back(ms.schmidt);
        }
    } else {
        throw InvalidInput("unknown state kind: " + kind);
    }
    return s;
}

} // namespace

void validate_schmidt(const SchmidtSpec& s) {
    if (s.lambdas.size() < 2) throw InvalidInput("lambdas must have at least 2 entries");
    double sum = 0.0;
    for (double l : s.lambdas) {
        if (!std::isfinite(l) || l < 0.0) throw InvalidInput("lambdas must be non-negative");
        sum += l;
    }
    if (std::abs(sum - 1.0) > kTraceTol) throw InvalidInput("lambdas must sum to 1");
}

PreparedState make_pure_schmidt(const SchmidtSpec& s) {
    validate_schmidt(s);
    const int d = static_cast<int>(s.lambdas.size());
    require_local_dim(d);
    StateSpec spec;
    spec.kind = StateKind::pure_schmidt;
    spec.schmidt = s;
    return PreparedState{DensityMatrix(pure_schmidt_mat(s)), BipartiteShape(d, d), spec, {}};
}

DensityMatrix make_max_entangled(int d) {
    require_local_dim(d);
    return DensityMatrix(phi_plus_mat(d));
}

DensityMatrix make_werner(int d, double x) {
    require_local_dim(d);
    require_weight(x, "x");
    const MatC f = swap_operator(d);
    const MatC id = MatC::identity(d * d);
    // Trace-normalized projector mixture: x on the symmetric subspace,
    // (1-x) on the antisymmetric one; tr(F rho) = 2x - 1.
    const MatC qs = cplx(1.0 / (d * (d + 1.0)), 0.0) * (id + f);
    const MatC qa = cplx(1.0 / (d * (d - 1.0)), 0.0) * (id - f);
    return DensityMatrix(cplx(x, 0.0) * qs + cplx(1.0 - x, 0.0) * qa);
}

DensityMatrix make_isotropic(int d, double x) {
    require_local_dim(d);
    require_weight(x, "x");
    const MatC rho = cplx(x, 0.0) * phi_plus_mat(d)
                   + cplx((1.0 - x) / (d * d), 0.0) * MatC::identity(d * d);
    return DensityMatrix(rho);
}

DensityMatrix make_cna(int d, double x) {
    require_local_dim(d);
    require_weight(x, "x");
    MatC diag(d * d, d * d);
    for (int j = 0; j < d; ++j) diag(j * d + j, j * d + j) = 1.0 / d;
    return DensityMatrix(cplx(x, 0.0) * phi_plus_mat(d) + cplx(1.0 - x, 0.0) * diag);
}

MatC swap_operator(int d) {
    require_local_dim(d);
    MatC f(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) f(i * d + j, j * d + i) = 1.0;
    return f;
}

MatC maximally_mixed(int d) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    return cplx(1.0 / d, 0.0) * MatC::identity(d);
}

StateSpec state_spec_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("state spec is not valid JSON: ") + e.what());
    }
    return spec_from_json(j);
}

PreparedState prepare_state(const StateSpec& spec) {
    switch (spec.kind) {
    case StateKind::pure_schmidt:
        return make_pure_schmidt(spec.schmidt);
    case StateKind::max_entangled:
        return PreparedState{make_max_entangled(spec.d), BipartiteShape(spec.d, spec.d), spec, {}};
    case StateKind::werner:
        return PreparedState{make_werner(spec.d, spec.x), BipartiteShape(spec.d, spec.d), spec, {}};
    case StateKind::isotropic:
        return PreparedState{make_isotropic(spec.d, spec.x), BipartiteShape(spec.d, spec.d), spec, {}};
    case StateKind::cna:
        return PreparedState{make_cna(spec.d, spec.x), BipartiteShape(spec.d, spec.d), spec, {}};
    case StateKind::dense: {
        const int n = spec.dA * spec.dB;
        MatC m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = cplx(spec.re[i][j], spec.im[i][j]);
        // DensityMatrix validation produces the hermitian/trace/psd errors.
        return PreparedState{DensityMatrix(std::move(m)), BipartiteShape(spec.dA, spec.dB), spec, {}};
    }
    case StateKind::ensemble: {
        if (spec.weights.size() != spec.members.size() || spec.weights.empty())
            throw InvalidInput("weights and members must be non-empty and the same length");
        double wsum = 0.0;
        for (double w : spec.weights) {
            if (!std::isfinite(w) || w < 0.0) throw InvalidInput("weights must be non-negative");
            wsum += w;
        }
        if (std::abs(wsum - 1.0) > kTraceTol) throw InvalidInput("weights must sum to 1");
        const int d = static_cast<int>(spec.members.front().lambdas.size());
        EnsembleDecomposition dec;
        MatC mix(d * d, d * d);
        for (std::size_t k = 0; k < spec.members.size(); ++k) {
            if (static_cast<int>(spec.members[k].lambdas.size()) != d)
                throw InvalidInput("ensemble members must share one dimension");
            validate_schmidt(spec.members[k]);
            MatC part = pure_schmidt_mat(spec.members[k]);
            mix = mix + cplx(spec.weights[k], 0.0) * part;
            dec.members.emplace_back(std::move(part));
        }
        dec.weights = spec.weights;
        return PreparedState{DensityMatrix(std::move(mix)), BipartiteShape(d, d), spec,
                             std::move(dec)};
    }
    }
    throw InvalidInput("unknown state kind");
}

PreparedState parse_state_spec(const std::string& text) {
    return prepare_state(state_spec_from_json_text(text));
}

DensityMatrix random_pure(int d, std::uint64_t seed) {
    require_local_dim(d);
    Rng rng(seed);
    const int n = d * d;
    std::vector<cplx> psi(n);
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
        psi[i] = cplx(rng.next_gaussian(), rng.next_gaussian());
        norm2 += std::norm(psi[i]);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    MatC rho(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rho(i, j) = psi[i] * std::conj(psi[j]) * inv * inv;
    return DensityMatrix(std::move(rho));
}

SchmidtSpec random_schmidt(int d, Rng& rng) {
    SchmidtSpec s;
    s.lambdas.resize(d);
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
        s.lambdas[i] = -std::log(rng.next_open_double());
        sum += s.lambdas[i];
    }
    for (int i = 0; i < d; ++i) s.lambdas[i] /= sum;
    // Renormalize exactly enough for the 1e-10 sum check.
    double check = 0.0;
    for (double l : s.lambdas) check += l;
    s.lambdas[0] += 1.0 - check;
    return s;
}

MatC random_matrix(int rows, int cols, Rng& rng) {
    MatC m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
    return m;
}

MatC random_unitary_mat(int n, Rng& rng) {
    MatC g = random_matrix(n, n, rng);
    // Modified Gram-Schmidt on columns, two passes for orthogonality at the
    // kUnitaryTol level.
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < j; ++k) {
                cplx dot = 0.0;
                for (int i = 0; i < n; ++i) dot += std::conj(g(i, k)) * g(i, j);
                for (int i = 0; i < n; ++i) g(i, j) -= dot * g(i, k);
            }
            double norm2 = 0.0;
            for (int i = 0; i < n; ++i) norm2 += std::norm(g(i, j));
            const double inv = 1.0 / std::sqrt(norm2);
            for (int i = 0; i < n; ++i) g(i, j) *= inv;
        }
    }
    return g;
}

} // namespace em
