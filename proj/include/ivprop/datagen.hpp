#pragma once

#include <cstdint>
#include <vector>

#include "ivprop/dataset.hpp"
#include "ivprop/tensor.hpp"

// Generators for the three test problems and their ideal-interval datasets.
// Deterministic per seed; independent samples use derived per-sample seeds.

namespace ivp::gen {

// --- 1D regression: y = sin(2x) e^{-x} + 1 + eps on [0, pi] ---

double reg1d_true(double x);

struct Reg1dConfig {
    std::size_t n = 100;
    std::uint64_t seed = 0;
    double noise_std = 0.025;
};

data::PointDataset gen_1d_regression(const Reg1dConfig& cfg);

// --- Gaussian process sampling ---

struct GpConfig {
    double length_scale = 0.1;  // > 0
    Tensor grid;                // (n x dim) coordinates
    double jitter = 1e-8;       // escalates x10 up to 1e-4 before erroring
};

// RBF kernel matrix exp(-|x - x'|^2 / (2 l^2)) over the grid rows.
Tensor rbf_kernel(const Tensor& grid, double length_scale);

// Draws (n x m) zero-mean samples via Cholesky of K + jitter I.
Tensor sample_gp(const GpConfig& cfg, std::size_t n, std::uint64_t seed);

// Lower-triangular Cholesky; throws if not positive definite.
Tensor cholesky(const Tensor& spd);

// --- 1D Poisson: g'' = 20 u, g(0) = g(1) = 0 ---

inline constexpr std::size_t kPoissonGridNodes = 101;  // dx = 0.01
inline constexpr std::size_t kPdeSensors = 100;

// Core solve on a uniform Dirichlet grid (nodes include both boundaries);
// u_grid holds the forcing at every node.
Tensor poisson_solve_grid(const Tensor& u_grid);

// Sensor-facing wrapper: u at the 100 uniform sensor points is interpolated
// onto the 101-node grid; the solution is sampled back to the sensors.
Tensor solve_poisson_1d(const Tensor& u_sensors);

Tensor linspace(double a, double b, std::size_t n);
// Piecewise-linear resample of values on from_grid onto to_grid.
Tensor resample_linear(const Tensor& from_grid, const Tensor& values, const Tensor& to_grid);

// --- 2D Darcy: -div(a grad u) = f on the unit square, a = 0.1, f = -1 ---

inline constexpr std::size_t kDarcyGrid = 51;

// 5-point finite differences with Dirichlet data taken from the boundary ring
// of `boundary_grid` (g x g, interior entries ignored). Returns the full
// (g x g) field. Direct banded Cholesky solve; residual asserted < 1e-10.
Tensor solve_darcy_2d(const Tensor& boundary_grid, double a = 0.1, double f = -1.0);

// Boundary-ring coordinates of a g x g unit-square grid, row-major scan order.
Tensor boundary_ring_coords(std::size_t g);
// Scatter ring values (ring order as above) into a zeroed (g x g) field.
Tensor embed_boundary_ring(const Tensor& ring_values, std::size_t g);

// GP boundary fields: (n x g*g) rows with GP values on the ring, zero inside.
Tensor sample_gp_2d_boundary(std::size_t g, double length_scale, std::size_t n,
                             std::uint64_t seed, double jitter = 1e-8);

// --- problem-level dataset generators ---

struct PdeDatasetConfig {
    std::size_t n_samples = 2000;
    std::uint64_t seed = 0;
    double gp_length_scale = 0.1;   // 1D forcing
    double width_min = 0.05;        // interval widths (absolute)
    double width_max = 0.25;
};

// u ~ GP on the sensor grid, g = poisson(u); coords = sensor grid.
data::FunctionDataset gen_pde1d(const PdeDatasetConfig& cfg);

// Boundary GP fields on the 51x51 grid (flattened sensors), g = darcy
// solution field; coords = all grid points.
data::FunctionDataset gen_pde2d(const PdeDatasetConfig& cfg);

// --- ideal interval construction ---

struct IdealReg1dConfig {
    double width_min = 0.05;
    double width_max = 0.3;
    std::uint64_t seed = 0;
    double noise_margin_sigmas = 2.0;  // +- margin added to the output envelope
    double noise_std = 0.025;
    std::size_t grid_points = 2001;  // dense search per input interval
};

// Inputs centred on the base points; outputs by dense grid search over the
// true function, widened by the noise margin.
data::IntervalDataset build_ideal_intervals_reg1d(const data::PointDataset& base,
                                                  const IdealReg1dConfig& cfg);

enum class Propagation { ExactOpt, EndpointMonotone };

struct IdealPdeResult {
    data::IntervalFunctionDataset dataset;
    std::size_t nonmonotone_points = 0;  // coordinates where endpoint solves crossed
};

// Per instance: one width l_i ~ U(wmin, wmax) across all sensors; outputs by
// solving at u +- l/2 and sorting per coordinate.
IdealPdeResult build_ideal_intervals_pde(const data::FunctionDataset& base, double width_min,
                                         double width_max, std::uint64_t seed, bool darcy);

}  // namespace ivp::gen
