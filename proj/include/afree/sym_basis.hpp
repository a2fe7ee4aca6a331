#pragma once

#include "afree/common.hpp"

namespace afree {

/**
 * Orthonormal coordinate basis of the symmetric trace-free d x d matrices
 * under the Frobenius inner product. Strain and stress live in these
 * coordinates (m = 2 for d = 2, m = 5 for d = 3), which keeps all symbols
 * free of redundant channels.
 */
class SymTracefreeBasis {
public:
    explicit SymTracefreeBasis(int d) : d_(d) {
        if (d != 2 && d != 3) throw invalid_argument("SymTracefreeBasis: d must be 2 or 3");
        const double s2 = 1.0 / std::sqrt(2.0);
        if (d == 2) {
            basis_.resize(2, RealMatrix::Zero(2, 2));
            basis_[0] << s2, 0, 0, -s2;
            basis_[1] << 0, s2, s2, 0;
        } else {
            const double s6 = 1.0 / std::sqrt(6.0);
            basis_.resize(5, RealMatrix::Zero(3, 3));
            basis_[0] << 0, s2, 0, s2, 0, 0, 0, 0, 0;
            basis_[1] << 0, 0, s2, 0, 0, 0, s2, 0, 0;
            basis_[2] << 0, 0, 0, 0, 0, s2, 0, s2, 0;
            basis_[3] << s2, 0, 0, 0, -s2, 0, 0, 0, 0;
            basis_[4] << s6, 0, 0, 0, s6, 0, 0, 0, -2 * s6;
        }
    }

    int dim() const { return d_; }
    int m() const { return static_cast<int>(basis_.size()); }
    const RealMatrix& element(int i) const { return basis_[i]; }

    /// Coordinates -> matrix.
    Matrix embed(const Vector& coords) const {
        Matrix out = Matrix::Zero(d_, d_);
        for (int i = 0; i < m(); ++i) out += coords(i) * basis_[i];
        return out;
    }

    RealMatrix embed(const RealVector& coords) const {
        RealMatrix out = RealMatrix::Zero(d_, d_);
        for (int i = 0; i < m(); ++i) out += coords(i) * basis_[i];
        return out;
    }

    /// Matrix -> coordinates; projects onto the symmetric trace-free part first.
    Vector extract(const Matrix& A) const {
        Matrix S = 0.5 * (A + A.transpose());
        S -= (S.trace() / static_cast<double>(d_)) * Matrix::Identity(d_, d_);
        Vector out(m());
        for (int i = 0; i < m(); ++i) out(i) = (S.array() * basis_[i].array().cast<Complex>()).sum();
        return out;
    }

    RealVector extract(const RealMatrix& A) const {
        RealMatrix S = 0.5 * (A + A.transpose());
        S -= (S.trace() / static_cast<double>(d_)) * RealMatrix::Identity(d_, d_);
        RealVector out(m());
        for (int i = 0; i < m(); ++i) out(i) = (S.array() * basis_[i].array()).sum();
        return out;
    }

private:
    int d_;
    std::vector<RealMatrix> basis_;
};

}  // namespace afree
