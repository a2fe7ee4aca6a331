#pragma once

#include <random>

#include "afree/grid.hpp"
#include "afree/operators.hpp"

namespace afree {

/**
 * The operator data of a parabolic problem: Q of order k together with the
 * annihilator acting on the strain variable, plus the side-constraint block
 * (S, R, Ptilde*) in the pseudo-differential case.
 *
 * The first row of the space-time symbol reads (2 pi i xi_t) Id - Q* Pi_S Q
 * with Pi_S = Id when no side constraint is present; the second row is the
 * strain annihilator.
 */
struct ParabolicPair {
    std::string name;
    int d = 0;   // spatial dimension
    int k = 1;   // order of Q
    bool pseudo = false;

    OperatorSpec Q;                         // m -> n
    OperatorSpec Qstar;                     // n -> m
    std::optional<OperatorSpec> Pstar;      // plain-case annihilator of Q*
    std::optional<OperatorSpec> S;          // side constraint on u
    std::optional<OperatorSpec> R;          // potential of S
    std::optional<OperatorSpec> Ptilde_star;  // pseudo-case annihilator of Q* R

    int m() const { return Q.in_channels; }
    int n() const { return Q.out_channels; }

    const OperatorSpec& eps_annihilator() const {
        if (pseudo) return *Ptilde_star;
        return *Pstar;
    }

    /// Real factor of the Leray-type projector onto ker S[xi_x]; Id without S.
    RealMatrix side_projector(const RealVector& xi_x) const {
        if (!S || xi_x.squaredNorm() == 0.0) return RealMatrix::Identity(n(), n());
        RealMatrix Sr = eval_symbol_real(*S, xi_x);
        Matrix pinv = moore_penrose((Sr * Sr.transpose()).cast<Complex>());
        return RealMatrix::Identity(n(), n()) - Sr.transpose() * pinv.real() * Sr;
    }

    /// Real factor of Q* Pi_S Q[xi_x]; the full symbol is (-4 pi^2)^k times this.
    RealMatrix qpq_real(const RealVector& xi_x) const {
        RealMatrix G = eval_symbol_real(Q, xi_x);
        return G.transpose() * side_projector(xi_x) * G;
    }
};

/// Full space-time symbol, an (m + annihilator rows) x 2m block matrix.
inline Matrix parabolic_symbol(const ParabolicPair& pair, const RealVector& xi) {
    if (xi.size() != pair.d + 1) throw invalid_argument("parabolic_symbol: expected space-time frequency");
    const int m = pair.m();
    const RealVector xi_x = xi.tail(pair.d);
    const auto& annih = pair.eps_annihilator();
    const int rows_a = annih.out_channels;

    double scale = std::pow(-4.0 * pi * pi, pair.k);
    RealMatrix M = scale * pair.qpq_real(xi_x);
    Matrix A = eval_symbol(annih, xi_x);

    Matrix out = Matrix::Zero(m + rows_a, 2 * m);
    out.block(0, 0, m, m) = (two_pi_i * xi(0)) * Matrix::Identity(m, m);
    out.block(0, m, m, m) = -M.cast<Complex>();
    out.block(m, 0, rows_a, m) = A;
    return out;
}

/// Orthonormal basis of ker A[xi]; fails loudly when the dimension is not m.
inline Matrix kernel_basis(const ParabolicPair& pair, const RealVector& xi) {
    if (xi.squaredNorm() == 0.0) throw invalid_argument("kernel_basis: xi must be nonzero");
    Matrix K = kernel_of(parabolic_symbol(pair, xi));
    if (K.cols() != pair.m())
        throw std::runtime_error("kernel_basis: dim ker A[xi] != m; operator pair is inconsistent");
    return K;
}

enum class ConeLabel { Lambda1, Lambda2, Lambda3 };

/**
 * A real sample of the characteristic cone. For Lambda3 the stored pair
 * (w1, w2) represents the kernel element (w1, i w2).
 */
struct ConeSample {
    ConeLabel label;
    RealVector xi;  // (xi_t, xi_x)
    RealVector w1, w2;
    double residual = 0.0;  // |A[xi] (pair)| / |pair|
};

namespace detail {

inline RealVector gaussian_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    RealVector v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
}

inline RealVector random_lattice_freq(int dim, std::mt19937_64& rng, bool nonzero) {
    std::uniform_int_distribution<int> entry(-4, 4);
    RealVector xi(dim);
    do {
        for (int i = 0; i < dim; ++i) xi(i) = entry(rng);
    } while (nonzero && xi.squaredNorm() == 0.0);
    return xi;
}

inline double cone_residual(const ParabolicPair& pair, const RealVector& xi, const RealVector& w1,
                            const RealVector& w2, bool imag_sigma) {
    Vector v(2 * pair.m());
    v.head(pair.m()) = w1.cast<Complex>();
    v.tail(pair.m()) = imag_sigma ? (Complex{0, 1} * w2.cast<Complex>()).eval() : w2.cast<Complex>().eval();
    double denom = v.norm();
    if (denom == 0) return 0.0;
    return (parabolic_symbol(pair, xi) * v).norm() / denom;
}

/// Random real unit vector in the kernel of a real matrix (kernel must be nontrivial).
inline RealVector random_kernel_vec(const RealMatrix& A, std::mt19937_64& rng) {
    Matrix K = kernel_of(A.cast<Complex>());
    if (K.cols() == 0) throw std::runtime_error("random_kernel_vec: trivial kernel");
    RealVector coeff = gaussian_vec(static_cast<int>(K.cols()), rng);
    RealVector v = (K.real() * coeff);
    if (v.norm() < 1e-12) v = K.real().col(0);
    return v / v.norm();
}

}  // namespace detail

/// Draw a real cone element per the frequency regime of the label.
inline ConeSample cone_sample(const ParabolicPair& pair, ConeLabel label, std::mt19937_64& rng) {
    const int m = pair.m();
    ConeSample s;
    s.label = label;
    RealVector xi(pair.d + 1);
    switch (label) {
        case ConeLabel::Lambda2: {
            xi.setZero();
            std::uniform_int_distribution<int> t(1, 4);
            xi(0) = t(rng) * (rng() % 2 ? 1.0 : -1.0);
            s.w1 = RealVector::Zero(m);
            s.w2 = detail::gaussian_vec(m, rng).normalized();
            s.residual = detail::cone_residual(pair, xi, s.w1, s.w2, false);
            break;
        }
        case ConeLabel::Lambda1: {
            xi.setZero();
            xi.tail(pair.d) = detail::random_lattice_freq(pair.d, rng, true);
            RealVector xi_x = xi.tail(pair.d);
            // sigma part: ker(Pi_S Q)[xi_x]; strain part: ker of the annihilator
            RealMatrix PiQ = pair.side_projector(xi_x) * eval_symbol_real(pair.Q, xi_x);
            s.w2 = detail::random_kernel_vec(PiQ, rng);
            s.w1 = detail::random_kernel_vec(eval_symbol_real(pair.eps_annihilator(), xi_x), rng);
            s.residual = detail::cone_residual(pair, xi, s.w1, s.w2, false);
            break;
        }
        case ConeLabel::Lambda3: {
            std::uniform_int_distribution<int> t(1, 4);
            xi(0) = t(rng) * (rng() % 2 ? 1.0 : -1.0);
            xi.tail(pair.d) = detail::random_lattice_freq(pair.d, rng, true);
            s.w2 = detail::gaussian_vec(m, rng).normalized();
            double scale = std::pow(-4.0 * pi * pi, pair.k);
            RealMatrix M = scale * pair.qpq_real(xi.tail(pair.d));
            s.w1 = M * s.w2 / (2.0 * pi * xi(0));
            s.residual = detail::cone_residual(pair, xi, s.w1, s.w2, true);
            break;
        }
    }
    s.xi = xi;
    return s;
}

/**
 * Named operator pairs. "heat-d2"/"heat-d3": Q = div, P* = curl.
 * "fluid-d2"/"fluid-d3": Q* the deviatoric symmetric gradient, S = div,
 * R = curl*, and the annihilator Laplacian - (grad + grad^T) div.
 */
inline ParabolicPair builtin(const std::string& name) {
    ParabolicPair pair;
    pair.name = name;
    if (name == "heat-d2" || name == "heat-d3") {
        pair.d = name.back() == '2' ? 2 : 3;
        pair.k = 1;
        pair.pseudo = false;
        pair.Q = op_divergence(pair.d);
        pair.Qstar = op_gradient(pair.d);
        pair.Pstar = op_curl(pair.d);
    } else if (name == "fluid-d2" || name == "fluid-d3") {
        pair.d = name.back() == '2' ? 2 : 3;
        pair.k = 1;
        pair.pseudo = true;
        pair.Qstar = op_symdev_gradient(pair.d);
        pair.Q = op_div_symtf(pair.d);
        pair.S = op_divergence(pair.d);
        pair.R = op_curl_star(pair.d);
        pair.Ptilde_star = op_fluid_annihilator(pair.d);
    } else {
        throw invalid_argument("builtin: unknown operator pair '" + name + "'");
    }

    auto rank_q = constant_rank_check(pair.Q, 32);
    auto rank_a = constant_rank_check(pair.eps_annihilator(), 32);
    if (!rank_q.pass || !rank_a.pass)
        throw std::runtime_error("builtin: constant-rank check failed for '" + name + "'");
    if (!pair.pseudo && !potential_check(pair.Qstar, *pair.Pstar, 32))
        throw std::runtime_error("builtin: potential check failed for '" + name + "'");
    if (pair.pseudo && !potential_check(*pair.R, *pair.S, 32))
        throw std::runtime_error("builtin: side-constraint potential check failed for '" + name + "'");
    return pair;
}

/**
 * Per-spatial-mode symbol tables for one grid. All entries are real factors;
 * scalar powers of 2 pi i are applied where the full symbols are needed.
 * Immutable after construction, shareable across threads.
 */
class PairCache {
public:
    PairCache(const ParabolicPair& pair, GridPtr grid) : pair_(pair), grid_(std::move(grid)) {
        if (grid_->d() != pair.d) throw invalid_argument("PairCache: grid dimension mismatch");
        if (grid_->k() != pair.k) throw invalid_argument("PairCache: parabolic order mismatch");
        const std::int64_t nsp = grid_->spatial_points();
        const int m = pair_.m();
        const double mscale = std::pow(-4.0 * pi * pi, pair_.k);
        M_.resize(nsp);
        Mpinv_.resize(nsp);
        PiK_.resize(nsp);
        Gt_pinv_.resize(nsp);
        PiS_.resize(nsp);
        annih_.resize(nsp);
        const auto& annih_op = pair_.eps_annihilator();
        parallel_for(nsp, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t sx = lo; sx < hi; ++sx) {
                RealVector xi_x = spatial_freq(sx);
                if (xi_x.squaredNorm() == 0.0) {
                    M_[sx] = RealMatrix::Zero(m, m);
                    Mpinv_[sx] = RealMatrix::Zero(m, m);
                    PiK_[sx] = RealMatrix::Identity(m, m);
                    Gt_pinv_[sx] = RealMatrix::Zero(pair_.n(), m);
                    PiS_[sx] = RealMatrix::Identity(pair_.n(), pair_.n());
                    annih_[sx] = RealMatrix::Zero(annih_op.out_channels, m);
                    continue;
                }
                PiS_[sx] = pair_.side_projector(xi_x);
                RealMatrix G = eval_symbol_real(pair_.Q, xi_x);
                M_[sx] = mscale * (G.transpose() * PiS_[sx] * G);
                Mpinv_[sx] = moore_penrose(M_[sx].cast<Complex>()).real();
                annih_[sx] = eval_symbol_real(annih_op, xi_x);
                Matrix A = annih_[sx].cast<Complex>();
                Matrix Apinv = moore_penrose(A);
                PiK_[sx] = (Matrix::Identity(m, m) - Apinv * A).real();
                Gt_pinv_[sx] = moore_penrose(G.transpose().cast<Complex>()).real();
            }
        });
    }

    const ParabolicPair& pair() const { return pair_; }
    const TorusGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }

    RealVector spatial_freq(std::int64_t sx) const {
        RealVector xi(grid_->d());
        std::int64_t rest = sx;
        for (int a = grid_->d() - 1; a >= 0; --a) {
            xi(a) = grid_->freq_x(static_cast<int>(rest % grid_->Nx()));
            rest /= grid_->Nx();
        }
        return xi;
    }

    bool spatial_nyquist(std::int64_t sx) const {
        std::int64_t rest = sx;
        for (int a = grid_->d() - 1; a >= 0; --a) {
            if (grid_->nyquist_x(static_cast<int>(rest % grid_->Nx()))) return true;
            rest /= grid_->Nx();
        }
        return false;
    }

    /// Full symbol of Q* Pi_S Q including the (-4 pi^2)^k factor.
    const RealMatrix& M(std::int64_t sx) const { return M_[sx]; }
    const RealMatrix& M_pinv(std::int64_t sx) const { return Mpinv_[sx]; }
    /// Orthogonal projector onto ker of the strain annihilator (Id at xi_x = 0).
    const RealMatrix& kernel_projector(std::int64_t sx) const { return PiK_[sx]; }
    /// Real factor of the annihilator symbol (zero matrix at xi_x = 0).
    const RealMatrix& annihilator_real(std::int64_t sx) const { return annih_[sx]; }
    const RealMatrix& side_projector(std::int64_t sx) const { return PiS_[sx]; }
    /// Real pseudoinverse factor of Q*[xi_x]; full inverse is (2 pi i)^{-k} times this.
    const RealMatrix& qstar_pinv_real(std::int64_t sx) const { return Gt_pinv_[sx]; }

private:
    ParabolicPair pair_;
    GridPtr grid_;
    std::vector<RealMatrix> M_, Mpinv_, PiK_, Gt_pinv_, PiS_, annih_;
};

}  // namespace afree
