#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's spectral shortcuts: tensors are dense, exponentials are
// Taylor series, ODEs are integrated by classical RK4.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Dense2 = std::array<std::array<double, 3>, 3>;
using Dense4 = std::array<std::array<std::array<std::array<double, 3>, 3>, 3>, 3>;

/// C_pqrs = lambda d_pq d_rs + mu (d_pr d_qs + d_ps d_qr), indices < dim.
Dense4 isotropic_dense(double lambda, double mu, int dim);

/// (C z)_pq = sum_rs C_pqrs z_rs.
Dense2 contract(const Dense4& c, const Dense2& z, int dim);

double frob(const Dense2& a, const Dense2& b, int dim);

/// Random symmetric dim x dim tensor with N(0,1) entries.
Dense2 random_sym(std::mt19937_64& rng, int dim);

/// Extreme Rayleigh quotient of C over symmetric tensors found by random sampling
/// followed by a shrinking-step random hill climb. sign=+1 for sup, -1 for inf.
double brute_force_rayleigh(const Dense4& c, int dim, int sign, std::uint64_t seed,
                            int samples = 100000, int climb_steps = 40000);

/// Mandel-form matrix exponential exp(-scale * C) applied to a symmetric tensor
/// via a truncated Taylor series with scaling and squaring.
Dense2 series_exp_apply(const Dense4& c, int dim, double scale, const Dense2& e);

/// Classical RK4 for y' = f(t, y) on a fixed step.
std::vector<double> rk4(const std::function<std::vector<double>(double, const std::vector<double>&)>& f,
                        std::vector<double> y, double t0, double t1, int steps);

/// Composite Simpson rule of f on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n);

/// Observed convergence order from errors at successive halvings.
std::vector<double> observed_orders(const std::vector<double>& errors);

}  // namespace oracle
