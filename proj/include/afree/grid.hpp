#pragma once

#include <array>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "afree/common.hpp"

namespace afree {

/**
 * Discretized space-time torus T_1 x T_d with parabolic-order metadata.
 *
 * Frequencies follow the centered convention with the Nyquist index mapped
 * to frequency zero; all derivative-type symbols therefore see an odd
 * frequency map and real fields stay real under multipliers. The raw
 * lattice still stores all Nt * Nx^d modes and transforms are exact.
 *
 * Immutable after construction and shareable across threads. FFTW plans are
 * created once; execution uses the new-array interface, which is reentrant.
 */
class TorusGrid {
public:
    TorusGrid(int d, int Nt, int Nx, double T = 1.0, int k = 1)
        : d_(d), Nt_(Nt), Nx_(Nx), T_(T), k_(k) {
        if (d != 2 && d != 3) throw invalid_argument("TorusGrid: d must be 2 or 3");
        if (Nt < 4 || Nt % 2 != 0) throw invalid_argument("TorusGrid: Nt must be even and >= 4");
        if (Nx < 4 || Nx % 2 != 0) throw invalid_argument("TorusGrid: Nx must be even and >= 4");
        if (T <= 0) throw invalid_argument("TorusGrid: T must be positive");
        if (k < 1) throw invalid_argument("TorusGrid: k must be >= 1");

        spatial_points_ = 1;
        for (int i = 0; i < d_; ++i) spatial_points_ *= Nx_;
        points_ = static_cast<std::int64_t>(Nt_) * spatial_points_;

        freq_t_.resize(Nt_);
        for (int i = 0; i < Nt_; ++i) freq_t_[i] = centered(i, Nt_);
        freq_x_.resize(Nx_);
        for (int i = 0; i < Nx_; ++i) freq_x_[i] = centered(i, Nx_);

        std::vector<Complex> scratch(points_);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        {
            std::array<int, 4> n{Nt_, Nx_, Nx_, Nx_};
            plan_fwd_ = fftw_plan_dft(d_ + 1, n.data(), buf, buf, FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
            plan_bwd_ = fftw_plan_dft(d_ + 1, n.data(), buf, buf, FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
            plan_sp_fwd_ = fftw_plan_dft(d_, n.data() + 1, buf, buf, FFTW_FORWARD,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
            plan_sp_bwd_ = fftw_plan_dft(d_, n.data() + 1, buf, buf, FFTW_BACKWARD,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        if (!plan_fwd_ || !plan_bwd_ || !plan_sp_fwd_ || !plan_sp_bwd_)
            throw std::runtime_error("TorusGrid: FFTW planning failed");
    }

    ~TorusGrid() {
        fftw_destroy_plan(plan_fwd_);
        fftw_destroy_plan(plan_bwd_);
        fftw_destroy_plan(plan_sp_fwd_);
        fftw_destroy_plan(plan_sp_bwd_);
    }
    TorusGrid(const TorusGrid&) = delete;
    TorusGrid& operator=(const TorusGrid&) = delete;

    int d() const { return d_; }
    int Nt() const { return Nt_; }
    int Nx() const { return Nx_; }
    double T() const { return T_; }
    int k() const { return k_; }
    std::int64_t points() const { return points_; }
    std::int64_t spatial_points() const { return spatial_points_; }

    /// Raw centered frequency of a lattice index (Nyquist keeps its sign).
    int raw_freq_t(int it) const { return freq_t_[it]; }
    int raw_freq_x(int ix) const { return freq_x_[ix]; }

    /// Frequency as seen by symbols: Nyquist index maps to zero.
    int freq_t(int it) const { return it == Nt_ / 2 ? 0 : freq_t_[it]; }
    int freq_x(int ix) const { return ix == Nx_ / 2 ? 0 : freq_x_[ix]; }

    bool nyquist_t(int it) const { return it == Nt_ / 2; }
    bool nyquist_x(int ix) const { return ix == Nx_ / 2; }

    /// Lattice index of an integer frequency (must be representable).
    int index_of_freq_t(int xi) const { return index_of(xi, Nt_, "temporal"); }
    int index_of_freq_x(int xi) const { return index_of(xi, Nx_, "spatial"); }

    /// Decode a flat mode index into (it, ix[0..d-1]).
    void decode(std::int64_t flat, int& it, std::array<int, 3>& ix) const {
        for (int a = d_ - 1; a >= 0; --a) {
            ix[static_cast<std::size_t>(a)] = static_cast<int>(flat % Nx_);
            flat /= Nx_;
        }
        it = static_cast<int>(flat);
    }

    std::int64_t encode(int it, const std::array<int, 3>& ix) const {
        std::int64_t flat = it;
        for (int a = 0; a < d_; ++a) flat = flat * Nx_ + ix[static_cast<std::size_t>(a)];
        return flat;
    }

    /// Symbol frequency (xi_t / T, xi_x) at a flat mode, Nyquist zeroed.
    RealVector symbol_freq(std::int64_t flat) const {
        int it;
        std::array<int, 3> ix{};
        decode(flat, it, ix);
        RealVector xi(d_ + 1);
        xi(0) = static_cast<double>(freq_t(it)) / T_;
        for (int a = 0; a < d_; ++a) xi(a + 1) = static_cast<double>(freq_x(ix[static_cast<std::size_t>(a)]));
        return xi;
    }

    bool any_nyquist(std::int64_t flat) const {
        int it;
        std::array<int, 3> ix{};
        decode(flat, it, ix);
        if (nyquist_t(it)) return true;
        for (int a = 0; a < d_; ++a)
            if (nyquist_x(ix[static_cast<std::size_t>(a)])) return true;
        return false;
    }

    /// Unnormalized in-place DFT of one component over all d+1 axes.
    void fft_all(Complex* data, int direction) const {
        auto* buf = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(direction == FFTW_FORWARD ? plan_fwd_ : plan_bwd_, buf, buf);
    }

    /// Unnormalized in-place DFT of one time slice over the d spatial axes.
    void fft_spatial(Complex* slice, int direction) const {
        auto* buf = reinterpret_cast<fftw_complex*>(slice);
        fftw_execute_dft(direction == FFTW_FORWARD ? plan_sp_fwd_ : plan_sp_bwd_, buf, buf);
    }

private:
    static int centered(int i, int N) { return i < N / 2 ? i : i - N; }

    static int index_of(int xi, int N, const char* axis) {
        if (xi < -N / 2 + 1 || xi > N / 2 - 1)
            throw invalid_argument(std::string("frequency outside ") + axis + " lattice");
        return xi >= 0 ? xi : xi + N;
    }

    int d_, Nt_, Nx_;
    double T_;
    int k_;
    std::int64_t points_ = 0, spatial_points_ = 0;
    std::vector<int> freq_t_, freq_x_;
    fftw_plan plan_fwd_{}, plan_bwd_{}, plan_sp_fwd_{}, plan_sp_bwd_{};
};

using GridPtr = std::shared_ptr<const TorusGrid>;

inline GridPtr make_grid(int d, int Nt, int Nx, double T = 1.0, int k = 1) {
    return std::make_shared<const TorusGrid>(d, Nt, Nx, T, k);
}

enum class Space { Physical, Frequency };

/**
 * Multi-component complex field on a space-time torus, with physical- and
 * frequency-space views. Forward transforms carry 1/(Nt * Nx^d) so the
 * zero mode of the spectrum is the mean. Value-semantic; safe to move
 * between threads.
 */
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(GridPtr grid, int components, Space space = Space::Physical, bool real_valued = true)
        : grid_(std::move(grid)), m_(components), space_(space), real_(real_valued),
          values_(static_cast<std::size_t>(m_) * grid_->points(), Complex{0.0, 0.0}) {
        if (components < 1) throw invalid_argument("SpaceTimeField: need at least one component");
    }

    const TorusGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    int components() const { return m_; }
    Space space() const { return space_; }
    bool real_valued() const { return real_; }
    void set_real_valued(bool r) { real_ = r; }

    Complex& at(int c, std::int64_t flat) { return values_[static_cast<std::size_t>(c) * grid_->points() + flat]; }
    const Complex& at(int c, std::int64_t flat) const {
        return values_[static_cast<std::size_t>(c) * grid_->points() + flat];
    }
    Complex* component(int c) { return values_.data() + static_cast<std::size_t>(c) * grid_->points(); }
    const Complex* component(int c) const { return values_.data() + static_cast<std::size_t>(c) * grid_->points(); }

    std::vector<Complex>& raw() { return values_; }
    const std::vector<Complex>& raw() const { return values_; }

    /// Complex vector of all components at one lattice point / mode.
    Vector value(std::int64_t flat) const {
        Vector v(m_);
        for (int c = 0; c < m_; ++c) v(c) = at(c, flat);
        return v;
    }
    void set_value(std::int64_t flat, const Vector& v) {
        for (int c = 0; c < m_; ++c) at(c, flat) = v(c);
    }

    double norm2() const {
        double s = 0;
        for (const auto& z : values_) s += std::norm(z);
        // Parseval: both views give the same number up to the declared scaling.
        if (space_ == Space::Physical) s /= static_cast<double>(grid_->points());
        return std::sqrt(s);
    }

    SpaceTimeField& operator+=(const SpaceTimeField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    SpaceTimeField& operator-=(const SpaceTimeField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    SpaceTimeField& operator*=(double s) {
        for (auto& z : values_) z *= s;
        return *this;
    }

private:
    void check_compatible(const SpaceTimeField& o) const {
        if (o.m_ != m_ || o.grid_->points() != grid_->points() || o.space_ != space_)
            throw invalid_argument("SpaceTimeField: incompatible operands");
    }

    GridPtr grid_;
    int m_ = 0;
    Space space_ = Space::Physical;
    bool real_ = true;
    std::vector<Complex> values_;
};

/// Forward DFT; the result's zero mode is the mean of the input.
inline SpaceTimeField transform(const SpaceTimeField& f) {
    if (f.space() != Space::Physical) throw invalid_argument("transform: field already in frequency space");
    SpaceTimeField out(f.grid_ptr(), f.components(), Space::Frequency, f.real_valued());
    out.raw() = f.raw();
    const double scale = 1.0 / static_cast<double>(f.grid().points());
    for (int c = 0; c < f.components(); ++c) {
        f.grid().fft_all(out.component(c), FFTW_FORWARD);
        Complex* p = out.component(c);
        for (std::int64_t i = 0; i < f.grid().points(); ++i) p[i] *= scale;
    }
    return out;
}

inline SpaceTimeField inverse_transform(const SpaceTimeField& f) {
    if (f.space() != Space::Frequency) throw invalid_argument("inverse_transform: field not in frequency space");
    SpaceTimeField out(f.grid_ptr(), f.components(), Space::Physical, f.real_valued());
    out.raw() = f.raw();
    for (int c = 0; c < f.components(); ++c) f.grid().fft_all(out.component(c), FFTW_BACKWARD);
    return out;
}

inline SpaceTimeField to_frequency(const SpaceTimeField& f) {
    return f.space() == Space::Frequency ? f : transform(f);
}

inline SpaceTimeField to_physical(const SpaceTimeField& f) {
    return f.space() == Space::Physical ? f : inverse_transform(f);
}

/// F(0): exact spectral mean, one entry per component.
inline Vector mean(const SpaceTimeField& f) {
    if (f.space() == Space::Frequency) return f.value(0);
    Vector acc = Vector::Zero(f.components());
    for (int c = 0; c < f.components(); ++c) {
        const Complex* p = f.component(c);
        Complex s{0, 0};
        for (std::int64_t i = 0; i < f.grid().points(); ++i) s += p[i];
        acc(c) = s / static_cast<double>(f.grid().points());
    }
    return acc;
}

/**
 * Move spectrum mode xi to (lambda^{2k} xi_t, lambda xi_x); physically
 * v(lambda^{2k} t, lambda x). Modes carrying relative mass above 1e-13 must
 * stay on the lattice, otherwise an aliasing error is raised. The zero mode
 * is untouched.
 */
inline SpaceTimeField parabolic_rescale(const SpaceTimeField& f, int lambda) {
    if (lambda < 1) throw invalid_argument("parabolic_rescale: lambda must be a positive integer");
    const TorusGrid& g = f.grid();
    SpaceTimeField hat = to_frequency(f);
    if (lambda == 1) return f.space() == Space::Physical ? f : hat;

    double max_abs = 0;
    for (const auto& z : hat.raw()) max_abs = std::max(max_abs, std::abs(z));
    const double thresh = 1e-13 * max_abs;

    std::int64_t lt = 1;
    for (int i = 0; i < 2 * g.k(); ++i) lt *= lambda;

    SpaceTimeField out(f.grid_ptr(), f.components(), Space::Frequency, f.real_valued());
    for (std::int64_t flat = 0; flat < g.points(); ++flat) {
        int it;
        std::array<int, 3> ix{};
        g.decode(flat, it, ix);
        bool carries = false;
        for (int c = 0; c < f.components(); ++c)
            if (std::abs(hat.at(c, flat)) > thresh) carries = true;
        if (!carries) continue;

        std::int64_t xt = lt * g.raw_freq_t(it);
        if (xt < -g.Nt() / 2 + 1 || xt > g.Nt() / 2 - 1)
            throw invalid_argument("parabolic_rescale: temporal mode leaves the lattice (aliasing)");
        std::array<int, 3> jx{};
        for (int a = 0; a < g.d(); ++a) {
            std::int64_t xx = static_cast<std::int64_t>(lambda) * g.raw_freq_x(ix[static_cast<std::size_t>(a)]);
            if (xx < -g.Nx() / 2 + 1 || xx > g.Nx() / 2 - 1)
                throw invalid_argument("parabolic_rescale: spatial mode leaves the lattice (aliasing)");
            jx[static_cast<std::size_t>(a)] = g.index_of_freq_x(static_cast<int>(xx));
        }
        std::int64_t target = g.encode(g.index_of_freq_t(static_cast<int>(xt)), jx);
        for (int c = 0; c < f.components(); ++c) out.at(c, target) += hat.at(c, flat);
    }
    return f.space() == Space::Physical ? inverse_transform(out) : out;
}

}  // namespace afree
