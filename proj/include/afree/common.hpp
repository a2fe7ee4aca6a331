#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace afree {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;
inline const Complex two_pi_i{0.0, 2.0 * pi};

/// Thrown when an input violates a documented precondition.
struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative routine fails to reach its tolerance.
struct no_convergence : std::runtime_error {
    double last_residual;
    no_convergence(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
};

/// Worker cap for data-parallel loops. AFREE_THREADS overrides hardware count.
inline unsigned thread_budget() {
    if (const char* env = std::getenv("AFREE_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Split [0,n) across the thread budget. Bodies must be independent per index.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& chunk) {
    unsigned workers = thread_budget();
    if (workers <= 1 || n < 256) {
        chunk(0, n);
        return;
    }
    std::int64_t per = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::int64_t lo = 0; lo < n; lo += per) {
        std::int64_t hi = std::min(n, lo + per);
        pool.emplace_back([=, &chunk] { chunk(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace afree
