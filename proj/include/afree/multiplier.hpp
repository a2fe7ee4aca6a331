#pragma once

#include "afree/grid.hpp"
#include "afree/operators.hpp"

namespace afree {

/**
 * Apply a matrix-valued frequency multiplier mode by mode. The symbol sees
 * Nyquist-zeroed frequencies with xi_t already divided by the period. The
 * zero mode is handled by `zero_mode` (default: drop the mean).
 */
inline SpaceTimeField apply_multiplier(const SpaceTimeField& f,
                                       const std::function<Matrix(const RealVector&)>& symbol,
                                       std::optional<Matrix> zero_mode = std::nullopt) {
    SpaceTimeField hat = to_frequency(f);
    const TorusGrid& g = f.grid();

    Matrix at0 = zero_mode ? *zero_mode : Matrix();
    Matrix probe = symbol(g.symbol_freq(g.points() > 1 ? 1 : 0));
    const int out_ch = static_cast<int>(probe.rows());
    if (static_cast<int>(probe.cols()) != f.components())
        throw invalid_argument("apply_multiplier: symbol input channels do not match field");
    if (zero_mode && (at0.rows() != out_ch || at0.cols() != f.components()))
        throw invalid_argument("apply_multiplier: zero-mode matrix shape mismatch");

    SpaceTimeField out(f.grid_ptr(), out_ch, Space::Frequency, f.real_valued());
    parallel_for(g.points(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t flat = lo; flat < hi; ++flat) {
            Vector v = hat.value(flat);
            Vector w;
            if (flat == 0)
                w = zero_mode ? (at0 * v).eval() : Vector::Zero(out_ch).eval();
            else
                w = symbol(g.symbol_freq(flat)) * v;
            out.set_value(flat, w);
        }
    });
    return f.space() == Space::Physical ? inverse_transform(out) : out;
}

/// Spatial-homogeneous operator acting slice-wise on a space-time field.
inline SpaceTimeField apply_spatial_operator(const SpaceTimeField& f, const OperatorSpec& op) {
    if (op.xi_dim != f.grid().d()) throw invalid_argument("apply_spatial_operator: dimension mismatch");
    auto fn = [&op, d = f.grid().d()](const RealVector& xi) { return eval_symbol(op, xi.tail(d)); };
    return apply_multiplier(f, fn, Matrix::Zero(op.out_channels, op.in_channels));
}

/**
 * Anisotropic Sobolev norm at integrability 2: the l2 norm of
 * (1+|xi_t|^2)^{a/2} (1+|xi_x|^2)^{b/2} F(xi). At a = b = 0 this is the
 * L2 norm.
 */
inline double sobolev_norm(const SpaceTimeField& f, double alpha, double beta) {
    SpaceTimeField hat = to_frequency(f);
    const TorusGrid& g = f.grid();
    double acc = 0;
    for (std::int64_t flat = 0; flat < g.points(); ++flat) {
        RealVector xi = g.symbol_freq(flat);
        double wt = std::pow(1.0 + xi(0) * xi(0), alpha) * std::pow(1.0 + xi.tail(g.d()).squaredNorm(), beta);
        for (int c = 0; c < f.components(); ++c) acc += wt * std::norm(hat.at(c, flat));
    }
    return std::sqrt(acc);
}

/**
 * Smooth cutoff: 0 on (0,1/3], 1 on [2/3,oo), quintic smoothstep between.
 * phi and 1-phi form the partition used by the space-time splitter.
 */
struct CutoffProfile {
    double operator()(double r) const {
        if (r <= 1.0 / 3.0) return 0.0;
        if (r >= 2.0 / 3.0) return 1.0;
        double u = 3.0 * r - 1.0;
        return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }
};

struct SpacetimeSplit {
    SpaceTimeField temporal;  // Phi^t part
    SpaceTimeField spatial;   // Phi^x part
    Vector mean;
};

/**
 * Exact partition F = Phi^t F + Phi^x F + mean. Phi^t is supported where
 * (1+|xi_t|^2)^{1/2} / (1+|xi_x|^2)^{gamma/2} > 1/3, Phi^x where the ratio
 * is < 2/3.
 */
inline SpacetimeSplit split_spacetime(const SpaceTimeField& f, double gamma) {
    if (gamma <= 0) throw invalid_argument("split_spacetime: gamma must be positive");
    SpaceTimeField hat = to_frequency(f);
    const TorusGrid& g = f.grid();
    CutoffProfile phi;

    SpacetimeSplit out{SpaceTimeField(f.grid_ptr(), f.components(), Space::Frequency, f.real_valued()),
                       SpaceTimeField(f.grid_ptr(), f.components(), Space::Frequency, f.real_valued()),
                       hat.value(0)};
    for (std::int64_t flat = 1; flat < g.points(); ++flat) {
        RealVector xi = g.symbol_freq(flat);
        double ratio = std::sqrt(1.0 + xi(0) * xi(0)) / std::pow(1.0 + xi.tail(g.d()).squaredNorm(), gamma / 2.0);
        double ct = phi(ratio);
        for (int c = 0; c < f.components(); ++c) {
            Complex v = hat.at(c, flat);
            out.temporal.at(c, flat) = ct * v;
            out.spatial.at(c, flat) = (1.0 - ct) * v;
        }
    }
    if (f.space() == Space::Physical) {
        out.temporal = inverse_transform(out.temporal);
        out.spatial = inverse_transform(out.spatial);
    }
    return out;
}

}  // namespace afree
