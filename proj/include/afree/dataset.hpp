#pragma once

#include <algorithm>
#include <memory>
#include <numeric>

#include "afree/constitutive.hpp"

namespace afree {

/**
 * Point cloud of strain-stress pairs with a static kd-tree index for
 * nearest-point queries in the (p,q)-deviation metric
 * |eps - eps_i|^p + |sigma - sigma_i|^q. The index is immutable after
 * construction.
 */
class DataSet {
public:
    DataSet(std::vector<RealVector> eps_pts, std::vector<RealVector> sigma_pts, double p)
        : eps_(std::move(eps_pts)), sigma_(std::move(sigma_pts)), p_(p), q_(p / (p - 1.0)) {
        if (eps_.empty() || eps_.size() != sigma_.size())
            throw invalid_argument("DataSet: need matching, non-empty strain/stress lists");
        if (p <= 1) throw invalid_argument("DataSet: p must exceed 1");
        m_ = static_cast<int>(eps_[0].size());
        for (std::size_t i = 0; i < eps_.size(); ++i)
            if (eps_[i].size() != m_ || sigma_[i].size() != m_)
                throw invalid_argument("DataSet: inconsistent point dimensions");
        build_tree();
    }

    std::size_t size() const { return eps_.size(); }
    int m() const { return m_; }
    double p() const { return p_; }
    double q() const { return q_; }
    const RealVector& eps(std::size_t i) const { return eps_[i]; }
    const RealVector& sigma(std::size_t i) const { return sigma_[i]; }

    double deviation(std::size_t i, const RealVector& e, const RealVector& s) const {
        return std::pow((e - eps_[i]).norm(), p_) + std::pow((s - sigma_[i]).norm(), q_);
    }

    /// Index of the point minimizing the (p,q)-deviation.
    std::size_t nearest(const RealVector& e, const RealVector& s) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        search(0, e, s, best, best_i);
        return best_i;
    }

    /// Brute-force reference path, used by tests as the oracle.
    std::size_t nearest_linear(const RealVector& e, const RealVector& s) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < size(); ++i) {
            double v = deviation(i, e, s);
            if (v < best) {
                best = v;
                best_i = i;
            }
        }
        return best_i;
    }

private:
    struct Node {
        int axis = -1;          // splitting axis in the concatenated 2m coords
        double split = 0.0;
        std::int32_t lo = -1, hi = -1;  // children
        std::int32_t begin = 0, end = 0;  // leaf range into order_
        RealVector box_min, box_max;
    };

    double coord(std::size_t i, int axis) const {
        return axis < m_ ? eps_[i](axis) : sigma_[i](axis - m_);
    }

    void build_tree() {
        order_.resize(size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(2 * size() / leaf_size_ + 2);
        root_ = build(0, static_cast<std::int32_t>(size()));
    }

    std::int32_t build(std::int32_t begin, std::int32_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        node.box_min = RealVector::Constant(2 * m_, std::numeric_limits<double>::infinity());
        node.box_max = RealVector::Constant(2 * m_, -std::numeric_limits<double>::infinity());
        for (std::int32_t t = begin; t < end; ++t)
            for (int a = 0; a < 2 * m_; ++a) {
                double v = coord(order_[static_cast<std::size_t>(t)], a);
                node.box_min(a) = std::min(node.box_min(a), v);
                node.box_max(a) = std::max(node.box_max(a), v);
            }
        std::int32_t id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= leaf_size_) return id;

        int axis = 0;
        (node.box_max - node.box_min).maxCoeff(&axis);
        std::int32_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) { return coord(a, axis) < coord(b, axis); });
        nodes_[static_cast<std::size_t>(id)].axis = axis;
        nodes_[static_cast<std::size_t>(id)].split = coord(order_[static_cast<std::size_t>(mid)], axis);
        std::int32_t lo = build(begin, mid);
        std::int32_t hi = build(mid, end);
        nodes_[static_cast<std::size_t>(id)].lo = lo;
        nodes_[static_cast<std::size_t>(id)].hi = hi;
        return id;
    }

    /// Lower bound of the deviation over a node's bounding box.
    double box_bound(const Node& node, const RealVector& e, const RealVector& s) const {
        double de2 = 0, ds2 = 0;
        for (int a = 0; a < m_; ++a) {
            double gap = std::max({node.box_min(a) - e(a), e(a) - node.box_max(a), 0.0});
            de2 += gap * gap;
        }
        for (int a = 0; a < m_; ++a) {
            double gap = std::max({node.box_min(m_ + a) - s(a), s(a) - node.box_max(m_ + a), 0.0});
            ds2 += gap * gap;
        }
        return std::pow(de2, p_ / 2.0) + std::pow(ds2, q_ / 2.0);
    }

    void search(std::int32_t id, const RealVector& e, const RealVector& s, double& best,
                std::size_t& best_i) const {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (box_bound(node, e, s) >= best) return;
        if (node.axis < 0) {
            for (std::int32_t t = node.begin; t < node.end; ++t) {
                std::size_t i = order_[static_cast<std::size_t>(t)];
                double v = deviation(i, e, s);
                if (v < best) {
                    best = v;
                    best_i = i;
                }
            }
            return;
        }
        double at = node.axis < m_ ? e(node.axis) : s(node.axis - m_);
        std::int32_t first = at < node.split ? node.lo : node.hi;
        std::int32_t second = at < node.split ? node.hi : node.lo;
        search(first, e, s, best, best_i);
        search(second, e, s, best, best_i);
    }

    std::vector<RealVector> eps_, sigma_;
    double p_, q_;
    int m_ = 0;
    static constexpr std::int32_t leaf_size_ = 8;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = 0;
};

/// min_i |eps - eps_i|^p + |sigma - sigma_i|^q.
inline double f_datadriven(const DataSet& ds, const RealVector& eps, const RealVector& sigma) {
    return ds.deviation(ds.nearest(eps, sigma), eps, sigma);
}

enum class Provenance { Constitutive, DataDriven, Custom };

/**
 * Pointwise deviation function f(eps, sigma) >= 0 with growth metadata and,
 * when available, gradient and proximal evaluators. Thread-safe: evaluators
 * capture immutable state only.
 */
struct Integrand {
    std::function<double(const RealVector&, const RealVector&)> f;
    // gradient (optional): writes df/deps and df/dsigma
    std::function<void(const RealVector&, const RealVector&, RealVector&, RealVector&)> grad;
    // prox (optional): argmin f(w) + rho/2 |w - z|^2
    std::function<void(RealVector&, RealVector&, double)> prox;

    double p = 2.0, q = 2.0;
    double C1 = 0.0;                                  // growth constant, 0 = not certified
    std::optional<std::array<double, 3>> coercivity;  // C2, C3, C4 when certified
    Provenance provenance = Provenance::Custom;
    int m = 0;

    std::shared_ptr<const ConstitutiveLaw> law;  // set for constitutive provenance
    std::shared_ptr<const DataSet> data;         // set for data-driven provenance

    double operator()(const RealVector& e, const RealVector& s) const { return f(e, s); }
};

namespace detail {

/// Solve g(s) + rho s = target for monotone g with g(0) = 0, target >= 0.
template <class G>
double monotone_shift_inverse(G&& g, double rho, double target) {
    if (target <= 0) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (g(hi) + rho * hi < target) {
        hi *= 2.0;
        if (++guard > 300) throw no_convergence("monotone_shift_inverse: bracket failed", target);
    }
    double lo = 0.0;
    for (int i = 0; i < 96; ++i) {
        double mid = 0.5 * (lo + hi);
        (g(mid) + rho * mid < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline Integrand make_constitutive_integrand(const ConstitutiveLaw& law_in, int m) {
    auto law = std::make_shared<const ConstitutiveLaw>(law_in);
    Integrand out;
    out.m = m;
    out.p = law->p;
    out.q = law->q();
    out.provenance = Provenance::Constitutive;
    out.law = law;
    out.f = [law](const RealVector& e, const RealVector& s) { return f_constitutive(*law, e, s); };
    out.grad = [law](const RealVector& e, const RealVector& s, RealVector& ge, RealVector& gs) {
        ge = DW_eval(*law, e) - s;
        gs = conjugate_gradient_eval(*law, s) - e;
    };
    // Alternate the two radial subproblems; rho > 1 makes the joint problem
    // strongly convex so the sweep contracts.
    out.prox = [law](RealVector& e, RealVector& s, double rho) {
        const RealVector ze = e, zs = s;
        for (int sweep = 0; sweep < 80; ++sweep) {
            RealVector ye = zs * 0 + (s + rho * ze);  // target for DW(e) + rho e
            double te = ye.norm();
            double se = detail::monotone_shift_inverse([&](double r) { return law->dw_radial(r); }, rho, te);
            RealVector e_new = te > 0 ? RealVector((se / te) * ye) : RealVector(RealVector::Zero(e.size()));
            RealVector ys = e_new + rho * zs;  // target for DW*(s) + rho s
            double ts = ys.norm();
            double ss = detail::monotone_shift_inverse([&](double r) { return law->conjugate_derivative_radial(r); },
                                                       rho, ts);
            RealVector s_new = ts > 0 ? RealVector((ss / ts) * ys) : RealVector(RealVector::Zero(s.size()));
            double move = (e_new - e).norm() + (s_new - s).norm();
            e = e_new;
            s = s_new;
            if (move < 1e-13 * (1.0 + e.norm() + s.norm())) break;
        }
    };
    return out;
}

inline Integrand make_datadriven_integrand(std::shared_ptr<const DataSet> ds) {
    Integrand out;
    out.m = ds->m();
    out.p = ds->p();
    out.q = ds->q();
    out.provenance = Provenance::DataDriven;
    out.data = ds;
    out.f = [ds](const RealVector& e, const RealVector& s) { return f_datadriven(*ds, e, s); };
    out.grad = [ds](const RealVector& e, const RealVector& s, RealVector& ge, RealVector& gs) {
        std::size_t i = ds->nearest(e, s);
        RealVector de = e - ds->eps(i), dsg = s - ds->sigma(i);
        double ne = de.norm(), ns = dsg.norm();
        ge = ne > 0 ? RealVector(ds->p() * std::pow(ne, ds->p() - 2.0) * de) : RealVector(RealVector::Zero(e.size()));
        gs = ns > 0 ? RealVector(ds->q() * std::pow(ns, ds->q() - 2.0) * dsg) : RealVector(RealVector::Zero(s.size()));
    };
    out.prox = [ds](RealVector& e, RealVector& s, double rho) {
        const RealVector ze = e, zs = s;
        const double p = ds->p(), q = ds->q();
        double best = std::numeric_limits<double>::infinity();
        RealVector be = ze, bs = zs;
        for (std::size_t i = 0; i < ds->size(); ++i) {
            RealVector de = ze - ds->eps(i), dsg = zs - ds->sigma(i);
            double te = de.norm(), ts = dsg.norm();
            double re = detail::monotone_shift_inverse(
                [&](double r) { return p * std::pow(r, p - 1.0); }, rho, rho * te);
            double rs = detail::monotone_shift_inverse(
                [&](double r) { return q * std::pow(r, q - 1.0); }, rho, rho * ts);
            RealVector ce = ds->eps(i) + (te > 0 ? re / te : 0.0) * de;
            RealVector cs = ds->sigma(i) + (ts > 0 ? rs / ts : 0.0) * dsg;
            double val = std::pow(re, p) + std::pow(rs, q) +
                         0.5 * rho * ((ce - ze).squaredNorm() + (cs - zs).squaredNorm());
            if (val < best) {
                best = val;
                be = ce;
                bs = cs;
            }
        }
        e = be;
        s = bs;
    };
    return out;
}

// ---------------------------------------------------------------------------
// Coercivity audits
// ---------------------------------------------------------------------------

struct CoercivityReport {
    bool pass = false;
    double C_A = 0.0, C_B = 0.0;
    std::optional<std::size_t> witness;  // violating data point
    std::optional<std::pair<RealVector, RealVector>> witness_point;
};

/// Data case: verify D is contained in { C_A eps.sigma + C_B > |eps|^p + |sigma|^q }.
inline CoercivityReport coercivity_audit(const DataSet& ds, double C_A, double C_B) {
    CoercivityReport rep;
    rep.C_A = C_A;
    rep.C_B = C_B;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double lhs = C_A * ds.eps(i).dot(ds.sigma(i)) + C_B;
        double rhs = std::pow(ds.eps(i).norm(), ds.p()) + std::pow(ds.sigma(i).norm(), ds.q());
        if (!(lhs > rhs)) {
            rep.pass = false;
            rep.witness = i;
            return rep;
        }
    }
    rep.pass = true;
    return rep;
}

/// Search mode: smallest C_B making the audit pass for each C_A in the grid.
inline std::vector<CoercivityReport> coercivity_search(const DataSet& ds, const std::vector<double>& C_A_grid) {
    std::vector<CoercivityReport> out;
    for (double ca : C_A_grid) {
        double cb = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double need = std::pow(ds.eps(i).norm(), ds.p()) + std::pow(ds.sigma(i).norm(), ds.q()) -
                          ca * ds.eps(i).dot(ds.sigma(i));
            cb = std::max(cb, need);
        }
        CoercivityReport rep;
        rep.C_A = ca;
        rep.C_B = std::nextafter(cb, std::numeric_limits<double>::infinity()) + 1e-12 * (1.0 + std::abs(cb));
        rep.pass = true;
        out.push_back(rep);
    }
    return out;
}

/**
 * Integrand case: sample the lower bound f >= C2 (|eps|^p + |sigma|^q)
 * - C3 - C4 eps.sigma on a ball (radius 10, 10^4 samples by default);
 * certifies the constants into the integrand on success.
 */
inline CoercivityReport coercivity_audit(Integrand& f, double C2, double C3, double C4,
                                         double radius = 10.0, int n_samples = 10000,
                                         std::uint64_t seed = 2024) {
    CoercivityReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int it = 0; it < n_samples; ++it) {
        RealVector e(f.m), s(f.m);
        for (int c = 0; c < f.m; ++c) {
            e(c) = gauss(rng);
            s(c) = gauss(rng);
        }
        double r = radius * std::pow(unif(rng), 1.0 / (2 * f.m));
        double n = std::sqrt(e.squaredNorm() + s.squaredNorm());
        if (n > 0) {
            e *= r / n;
            s *= r / n;
        }
        double bound = C2 * (std::pow(e.norm(), f.p) + std::pow(s.norm(), f.q)) - C3 - C4 * e.dot(s);
        if (f(e, s) < bound - 1e-10 * (1.0 + std::abs(bound))) {
            rep.pass = false;
            rep.witness_point = {e, s};
            return rep;
        }
    }
    rep.pass = true;
    f.coercivity = {{C2, C3, C4}};
    return rep;
}

}  // namespace afree
