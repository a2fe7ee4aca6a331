#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "afree/common.hpp"
#include "afree/sym_basis.hpp"

namespace afree {

enum class OperatorKind { SpatialHomogeneous, Parabolic, Pseudo };

struct CoeffTerm {
    std::vector<int> alpha;  // multi-index over the symbol variables
    RealMatrix matrix;       // out_channels x in_channels
};

/**
 * A constant-rank (pseudo-)differential operator given by symbol
 * coefficients or a symbol function.
 *
 * Differential kinds evaluate to sum_alpha (2 pi i)^{|alpha|} Q_alpha xi^alpha.
 * The adjoint follows the coefficient convention: transposed matrices, same
 * derivatives (no sign flip).
 */
struct OperatorSpec {
    OperatorKind kind = OperatorKind::SpatialHomogeneous;
    int order = 0;
    int in_channels = 0;
    int out_channels = 0;
    int xi_dim = 0;
    std::vector<CoeffTerm> coeffs;
    std::function<Matrix(const RealVector&)> symbol_fn;  // pseudo kind; must be 0 at xi = 0 for inverse-type symbols
    std::string name;

    bool differential() const { return kind != OperatorKind::Pseudo; }
};

/// Real polynomial part sum_alpha Q_alpha xi^alpha (differential kinds only).
inline RealMatrix eval_symbol_real(const OperatorSpec& op, const RealVector& xi) {
    if (!op.differential()) throw invalid_argument("eval_symbol_real: pseudo operators have no polynomial part");
    if (xi.size() != op.xi_dim) throw invalid_argument("eval_symbol_real: frequency dimension mismatch");
    RealMatrix acc = RealMatrix::Zero(op.out_channels, op.in_channels);
    for (const auto& term : op.coeffs) {
        double mono = 1.0;
        for (std::size_t a = 0; a < term.alpha.size(); ++a)
            for (int rep = 0; rep < term.alpha[a]; ++rep) mono *= xi(static_cast<Eigen::Index>(a));
        acc += mono * term.matrix;
    }
    return acc;
}

inline Matrix eval_symbol(const OperatorSpec& op, const RealVector& xi) {
    if (xi.size() != op.xi_dim) throw invalid_argument("eval_symbol: frequency dimension mismatch");
    if (!op.differential()) return op.symbol_fn(xi);
    Matrix acc = Matrix::Zero(op.out_channels, op.in_channels);
    for (const auto& term : op.coeffs) {
        int total = 0;
        double mono = 1.0;
        for (std::size_t a = 0; a < term.alpha.size(); ++a) {
            total += term.alpha[a];
            for (int rep = 0; rep < term.alpha[a]; ++rep) mono *= xi(static_cast<Eigen::Index>(a));
        }
        acc += (std::pow(two_pi_i, total) * mono) * term.matrix;
    }
    return acc;
}

/// Coefficient adjoint: transposed matrices, channels swapped.
inline OperatorSpec adjoint(const OperatorSpec& op) {
    if (!op.differential()) throw invalid_argument("adjoint: pseudo operators are adjointed at the symbol level");
    OperatorSpec out = op;
    out.in_channels = op.out_channels;
    out.out_channels = op.in_channels;
    out.name = op.name.empty() ? "" : op.name + "*";
    for (auto& term : out.coeffs) term.matrix = term.matrix.transpose().eval();
    return out;
}

/**
 * Moore-Penrose inverse with singular values below tol * sigma_max treated
 * as zero. The zero matrix maps to the zero matrix.
 */
inline Matrix moore_penrose(const Matrix& A, double tol = 1e-12) {
    if (tol <= 0) throw invalid_argument("moore_penrose: tol must be positive");
    if (A.rows() == 0 || A.cols() == 0) return Matrix::Zero(A.cols(), A.rows());
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    Matrix out = Matrix::Zero(A.cols(), A.rows());
    if (smax <= 0) return out;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol * smax)
            out += (1.0 / s(i)) * svd.matrixV().col(i) * svd.matrixU().col(i).adjoint();
    }
    return out;
}

inline int numerical_rank(const Matrix& A, double rel_tol = 1e-8) {
    if (A.rows() == 0 || A.cols() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

/// Orthonormal basis of the image (columns).
inline Matrix image_basis(const Matrix& A, double rel_tol = 1e-8) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(0) > 0 && s(i) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of the kernel (columns).
inline Matrix kernel_of(const Matrix& A, double rel_tol = 1e-8) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(0) > 0 && s(i) > rel_tol * s(0)) ++r;
    return svd.matrixV().rightCols(A.cols() - r);
}

/// Spectral-norm distance between the orthogonal projectors of two subspaces.
inline double subspace_distance(const Matrix& U, const Matrix& V) {
    if (U.cols() != V.cols()) return 1.0;
    if (U.cols() == 0) return 0.0;
    Matrix D = U * U.adjoint() - V * V.adjoint();
    Eigen::JacobiSVD<Matrix> svd(D);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

struct RankReport {
    int rank = -1;
    bool pass = false;
    std::optional<RealVector> witness;  // a frequency where the rank deviates
};

namespace detail {

inline std::vector<RealVector> sphere_samples(int dim, int n_samples, std::uint64_t seed) {
    std::vector<RealVector> pts;
    // all coordinate axes and the +-1 diagonals first, then random directions
    for (int a = 0; a < dim; ++a) {
        RealVector e = RealVector::Zero(dim);
        e(a) = 1.0;
        pts.push_back(e);
        pts.push_back(-e);
    }
    for (int mask = 0; mask < (1 << dim); ++mask) {
        RealVector v(dim);
        for (int a = 0; a < dim; ++a) v(a) = (mask >> a) & 1 ? -1.0 : 1.0;
        pts.push_back(v / v.norm());
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < n_samples; ++i) {
        RealVector v(dim);
        do {
            for (int a = 0; a < dim; ++a) v(a) = gauss(rng);
        } while (v.norm() < 1e-8);
        pts.push_back(v / v.norm());
    }
    return pts;
}

}  // namespace detail

/**
 * Sampled constant-rank verification: the numerical rank (relative tolerance
 * 1e-8) must agree across random sphere directions plus all axes and
 * diagonals. Evidence, not proof.
 */
inline RankReport constant_rank_check(const OperatorSpec& op, int n_samples = 256, std::uint64_t seed = 1234) {
    if (n_samples < 1) throw invalid_argument("constant_rank_check: n_samples must be >= 1");
    auto samples = detail::sphere_samples(op.xi_dim, n_samples, seed);
    std::vector<int> ranks;
    ranks.reserve(samples.size());
    int generic = 0;
    for (const auto& xi : samples) {
        ranks.push_back(numerical_rank(eval_symbol(op, xi)));
        generic = std::max(generic, ranks.back());
    }
    RankReport report;
    report.rank = generic;
    report.pass = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (ranks[i] != generic) {
            report.pass = false;
            report.witness = samples[i];
            break;
        }
    }
    return report;
}

/// Pass iff Image P[xi] = ker Q[xi] on all sampled xi != 0 (distance <= 1e-8).
inline bool potential_check(const OperatorSpec& P, const OperatorSpec& Q, int n_samples = 64,
                            std::uint64_t seed = 99) {
    if (P.out_channels != Q.in_channels)
        throw invalid_argument("potential_check: P output channels must match Q input channels");
    for (const auto& xi : detail::sphere_samples(P.xi_dim, n_samples, seed)) {
        Matrix img = image_basis(eval_symbol(P, xi));
        Matrix ker = kernel_of(eval_symbol(Q, xi));
        if (subspace_distance(img, ker) > 1e-8) return false;
    }
    return true;
}

/// Diagnostic only: span of ker P*[xi] over samples should be everything.
inline bool spanning_check(const OperatorSpec& Pstar, int n_samples = 64, std::uint64_t seed = 7) {
    Matrix stack(Pstar.in_channels, 0);
    for (const auto& xi : detail::sphere_samples(Pstar.xi_dim, n_samples, seed)) {
        Matrix ker = kernel_of(eval_symbol(Pstar, xi));
        Matrix grown(Pstar.in_channels, stack.cols() + ker.cols());
        grown << stack, ker;
        stack = grown;
        if (numerical_rank(stack) == Pstar.in_channels) return true;
    }
    return numerical_rank(stack) == Pstar.in_channels;
}

// ---------------------------------------------------------------------------
// Stock differential operators
// ---------------------------------------------------------------------------

inline OperatorSpec op_divergence(int d) {
    OperatorSpec op;
    op.order = 1;
    op.in_channels = d;
    op.out_channels = 1;
    op.xi_dim = d;
    op.name = "div";
    for (int j = 0; j < d; ++j) {
        CoeffTerm t;
        t.alpha.assign(d, 0);
        t.alpha[j] = 1;
        t.matrix = RealMatrix::Zero(1, d);
        t.matrix(0, j) = 1.0;
        op.coeffs.push_back(std::move(t));
    }
    return op;
}

inline OperatorSpec op_gradient(int d) {
    OperatorSpec op = adjoint(op_divergence(d));
    op.name = "grad";
    return op;
}

inline OperatorSpec op_curl(int d) {
    OperatorSpec op;
    op.order = 1;
    op.in_channels = d;
    op.out_channels = d * (d - 1) / 2;
    op.xi_dim = d;
    op.name = "curl";
    for (int a = 0; a < d; ++a) {
        CoeffTerm t;
        t.alpha.assign(d, 0);
        t.alpha[a] = 1;
        t.matrix = RealMatrix::Zero(op.out_channels, d);
        int row = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j, ++row) {
                if (a == i) t.matrix(row, j) += 1.0;
                if (a == j) t.matrix(row, i) -= 1.0;
            }
        op.coeffs.push_back(std::move(t));
    }
    return op;
}

inline OperatorSpec op_curl_star(int d) {
    OperatorSpec op = adjoint(op_curl(d));
    op.name = "curl*";
    return op;
}

inline OperatorSpec op_laplacian(int d, int channels = 1) {
    OperatorSpec op;
    op.order = 2;
    op.in_channels = channels;
    op.out_channels = channels;
    op.xi_dim = d;
    op.name = "laplace";
    for (int a = 0; a < d; ++a) {
        CoeffTerm t;
        t.alpha.assign(d, 0);
        t.alpha[a] = 2;
        t.matrix = RealMatrix::Identity(channels, channels);
        op.coeffs.push_back(std::move(t));
    }
    return op;
}

/// Q* of the fluid pair: u -> deviatoric symmetric gradient in coordinates.
inline OperatorSpec op_symdev_gradient(int d) {
    SymTracefreeBasis basis(d);
    OperatorSpec op;
    op.order = 1;
    op.in_channels = d;
    op.out_channels = basis.m();
    op.xi_dim = d;
    op.name = "symdev-grad";
    for (int j = 0; j < d; ++j) {
        CoeffTerm t;
        t.alpha.assign(d, 0);
        t.alpha[j] = 1;
        t.matrix = RealMatrix::Zero(basis.m(), d);
        // <E_i, symdev(e_j x e_l)> = E_i(j, l)
        for (int i = 0; i < basis.m(); ++i)
            for (int l = 0; l < d; ++l) t.matrix(i, l) = basis.element(i)(j, l);
        op.coeffs.push_back(std::move(t));
    }
    return op;
}

/// Q of the fluid pair: coordinates -> div of the embedded tensor.
inline OperatorSpec op_div_symtf(int d) {
    OperatorSpec op = adjoint(op_symdev_gradient(d));
    op.name = "div-symtf";
    return op;
}

/// Annihilator of Q* R for the fluid pair: Laplacian minus (grad + grad^T) div.
inline OperatorSpec op_fluid_annihilator(int d) {
    SymTracefreeBasis basis(d);
    const int m = basis.m();
    OperatorSpec op;
    op.order = 2;
    op.in_channels = m;
    op.out_channels = d * d;
    op.xi_dim = d;
    op.name = "fluid-annihilator";

    std::map<std::vector<int>, RealMatrix> terms;
    auto slot = [&](int a, int b) -> RealMatrix& {
        std::vector<int> alpha(d, 0);
        alpha[a] += 1;
        alpha[b] += 1;
        auto it = terms.find(alpha);
        if (it == terms.end()) it = terms.emplace(alpha, RealMatrix::Zero(d * d, m)).first;
        return it->second;
    };
    for (int c = 0; c < m; ++c) {
        const RealMatrix& E = basis.element(c);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                int row = i * d + j;
                for (int a = 0; a < d; ++a) {
                    slot(a, a)(row, c) += E(i, j);
                    slot(std::min(i, a), std::max(i, a))(row, c) -= E(a, j);
                    slot(std::min(j, a), std::max(j, a))(row, c) -= E(a, i);
                }
            }
    }
    for (auto& [alpha, matrix] : terms) {
        if (matrix.cwiseAbs().maxCoeff() == 0.0) continue;
        op.coeffs.push_back(CoeffTerm{alpha, matrix});
    }
    return op;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization for differential operator specs
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const OperatorSpec& op) {
    if (!op.differential()) throw invalid_argument("to_json: pseudo operators are not serializable");
    nlohmann::json j;
    j["kind"] = op.kind == OperatorKind::SpatialHomogeneous ? "spatial-homogeneous" : "parabolic";
    j["order"] = op.order;
    j["channels"] = {op.in_channels, op.out_channels};
    j["coeffs"] = nlohmann::json::array();
    for (const auto& term : op.coeffs) {
        nlohmann::json t;
        t["alpha"] = term.alpha;
        std::vector<std::vector<double>> rows;
        for (Eigen::Index r = 0; r < term.matrix.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(term.matrix.cols()));
            for (Eigen::Index c = 0; c < term.matrix.cols(); ++c) row[static_cast<std::size_t>(c)] = term.matrix(r, c);
            rows.push_back(std::move(row));
        }
        t["matrix"] = rows;
        j["coeffs"].push_back(std::move(t));
    }
    return j;
}

inline OperatorSpec operator_from_json(const nlohmann::json& j) {
    OperatorSpec op;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "spatial-homogeneous")
        op.kind = OperatorKind::SpatialHomogeneous;
    else if (kind == "parabolic")
        op.kind = OperatorKind::Parabolic;
    else
        throw invalid_argument("operator_from_json: unknown kind '" + kind + "'");
    op.order = j.at("order").get<int>();
    op.in_channels = j.at("channels").at(0).get<int>();
    op.out_channels = j.at("channels").at(1).get<int>();
    for (const auto& t : j.at("coeffs")) {
        CoeffTerm term;
        term.alpha = t.at("alpha").get<std::vector<int>>();
        auto rows = t.at("matrix").get<std::vector<std::vector<double>>>();
        term.matrix = RealMatrix::Zero(static_cast<Eigen::Index>(rows.size()),
                                       rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                term.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        if (term.matrix.rows() != op.out_channels || term.matrix.cols() != op.in_channels)
            throw invalid_argument("operator_from_json: coefficient shape mismatch");
        op.xi_dim = static_cast<int>(term.alpha.size());
        op.coeffs.push_back(std::move(term));
    }
    if (op.coeffs.empty()) throw invalid_argument("operator_from_json: no coefficients");
    return op;
}

}  // namespace afree
