#include "ivprop/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ivprop/kernels.hpp"
#include "ivprop/rng.hpp"

namespace ivp::gen {

double reg1d_true(double x) { return std::sin(2.0 * x) * std::exp(-x) + 1.0; }

data::PointDataset gen_1d_regression(const Reg1dConfig& cfg) {
    if (cfg.n == 0) throw std::invalid_argument("gen_1d_regression: n == 0");
    data::PointDataset d;
    d.inputs = Tensor::zeros({cfg.n, 1});
    d.outputs = Tensor::zeros({cfg.n, 1});
    const double pi = std::acos(-1.0);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        Rng rng = make_rng(derive_seed(cfg.seed, i));
        const double x = runif(rng, 0.0, pi);
        d.inputs.at(i, 0) = x;
        d.outputs.at(i, 0) = reg1d_true(x) + rnorm(rng, 0.0, cfg.noise_std);
    }
    return d;
}

Tensor rbf_kernel(const Tensor& grid, double length_scale) {
    if (!(length_scale > 0.0)) throw std::invalid_argument("rbf_kernel: length_scale <= 0");
    const std::size_t n = grid.shape[0], dim = grid.shape[1];
    Tensor k = Tensor::zeros({n, n});
    const double inv = 1.0 / (2.0 * length_scale * length_scale);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = grid.at(i, c) - grid.at(j, c);
                d2 += d * d;
            }
            const double v = std::exp(-d2 * inv);
            k.at(i, j) = v;
            k.at(j, i) = v;
        }
    }
    return k;
}

Tensor cholesky(const Tensor& spd) {
    const std::size_t n = spd.shape[0];
    Tensor l = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = spd.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

Tensor sample_gp(const GpConfig& cfg, std::size_t n, std::uint64_t seed) {
    if (cfg.grid.size() == 0) throw std::invalid_argument("sample_gp: empty grid");
    const std::size_t m = cfg.grid.shape[0];
    Tensor k = rbf_kernel(cfg.grid, cfg.length_scale);
    Tensor l;
    double jitter = cfg.jitter;
    for (;;) {
        Tensor kj = k;
        for (std::size_t i = 0; i < m; ++i) kj.at(i, i) += jitter;
        try {
            l = cholesky(kj);
            break;
        } catch (const std::runtime_error&) {
            jitter *= 10.0;
            if (jitter > 1e-4)
                throw std::runtime_error("sample_gp: kernel not positive definite at jitter 1e-4");
        }
    }
    Tensor out = Tensor::zeros({n, m});
    std::vector<double> z(m);
    for (std::size_t s = 0; s < n; ++s) {
        Rng rng = make_rng(derive_seed(seed, s));
        for (double& v : z) v = rnorm(rng, 0.0, 1.0);
        double* row = out.row_ptr(s);
        for (std::size_t i = 0; i < m; ++i) row[i] = kern::active().dot(l.row_ptr(i), z.data(), i + 1);
    }
    return out;
}

Tensor linspace(double a, double b, std::size_t n) {
    Tensor t = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i)
        t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

Tensor resample_linear(const Tensor& from_grid, const Tensor& values, const Tensor& to_grid) {
    const std::size_t n = from_grid.size();
    Tensor out = Tensor::zeros({to_grid.size()});
    for (std::size_t i = 0; i < to_grid.size(); ++i) {
        const double x = to_grid[i];
        if (x <= from_grid[0]) {
            out[i] = values[0];
            continue;
        }
        if (x >= from_grid[n - 1]) {
            out[i] = values[n - 1];
            continue;
        }
        const auto it = std::upper_bound(from_grid.data.begin(), from_grid.data.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - from_grid.data.begin());
        const double t = (x - from_grid[j - 1]) / (from_grid[j] - from_grid[j - 1]);
        out[i] = (1.0 - t) * values[j - 1] + t * values[j];
    }
    return out;
}

Tensor poisson_solve_grid(const Tensor& u_grid) {
    const std::size_t n = u_grid.size();
    if (n < 3) throw std::invalid_argument("poisson_solve_grid: need at least 3 nodes");
    const double h = 1.0 / static_cast<double>(n - 1);
    const std::size_t m = n - 2;  // interior unknowns
    // (g_{i-1} - 2 g_i + g_{i+1}) / h^2 = 20 u_i, g_0 = g_{n-1} = 0
    std::vector<double> diag(m, -2.0 / (h * h));
    std::vector<double> rhs(m);
    const double off = 1.0 / (h * h);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = 20.0 * u_grid[i + 1];
    // Thomas algorithm
    std::vector<double> cp(m), dp(m);
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < m; ++i) {
        const double denom = diag[i] - off * cp[i - 1];
        if (denom == 0.0) throw std::runtime_error("poisson_solve_grid: singular system");
        cp[i] = off / denom;
        dp[i] = (rhs[i] - off * dp[i - 1]) / denom;
    }
    Tensor g = Tensor::zeros({n});
    g[n - 2] = dp[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) g[i + 1] = dp[i] - cp[i] * g[i + 2];
    return g;
}

Tensor solve_poisson_1d(const Tensor& u_sensors) {
    if (u_sensors.size() != kPdeSensors)
        throw ShapeError("solve_poisson_1d: expected " + std::to_string(kPdeSensors) +
                         " sensor values, got " + std::to_string(u_sensors.size()));
    const Tensor sensors = linspace(0.0, 1.0, kPdeSensors);
    const Tensor grid = linspace(0.0, 1.0, kPoissonGridNodes);
    const Tensor u_grid = resample_linear(sensors, u_sensors, grid);
    const Tensor g_grid = poisson_solve_grid(u_grid);
    return resample_linear(grid, g_grid, sensors);
}

Tensor boundary_ring_coords(std::size_t g) {
    std::vector<double> coords;
    const double h = 1.0 / static_cast<double>(g - 1);
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j)
            if (i == 0 || i + 1 == g || j == 0 || j + 1 == g) {
                coords.push_back(static_cast<double>(j) * h);
                coords.push_back(static_cast<double>(i) * h);
            }
    return Tensor::matrix(coords.size() / 2, 2, std::move(coords));
}

Tensor embed_boundary_ring(const Tensor& ring_values, std::size_t g) {
    Tensor field = Tensor::zeros({g, g});
    std::size_t k = 0;
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j)
            if (i == 0 || i + 1 == g || j == 0 || j + 1 == g) field.at(i, j) = ring_values[k++];
    if (k != ring_values.size())
        throw ShapeError("embed_boundary_ring: ring size mismatch");
    return field;
}

namespace {

// Banded Cholesky solve of the 5-point Dirichlet Laplacian system.
class BandedSpd {
  public:
    BandedSpd(std::size_t n, std::size_t bw) : n_(n), bw_(bw), band_(n * (bw + 1), 0.0) {}

    // a(i, j) for j in [i - bw, i]
    double& at(std::size_t i, std::size_t j) { return band_[i * (bw_ + 1) + (j + bw_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return band_[i * (bw_ + 1) + (j + bw_ - i)]; }

    void factor() {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= bw_ ? i - bw_ : 0;
            for (std::size_t j = j0; j <= i; ++j) {
                double s = at(i, j);
                const std::size_t k0 = std::max(j0, j >= bw_ ? j - bw_ : 0);
                for (std::size_t k = k0; k < j; ++k) s -= at(i, k) * at(j, k);
                if (i == j) {
                    if (s <= 0.0) throw std::runtime_error("banded cholesky: not positive definite");
                    at(i, i) = std::sqrt(s);
                } else {
                    at(i, j) = s / at(j, j);
                }
            }
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= bw_ ? i - bw_ : 0;
            double s = b[i];
            for (std::size_t j = j0; j < i; ++j) s -= at(i, j) * b[j];
            b[i] = s / at(i, i);
        }
        for (std::size_t i = n_; i-- > 0;) {
            const std::size_t j1 = std::min(n_ - 1, i + bw_);
            double s = b[i];
            for (std::size_t j = i + 1; j <= j1; ++j) s -= at(j, i) * b[j];
            b[i] = s / at(i, i);
        }
        return b;
    }

  private:
    std::size_t n_, bw_;
    std::vector<double> band_;
};

}  // namespace

Tensor solve_darcy_2d(const Tensor& boundary_grid, double a, double f) {
    if (boundary_grid.rank() != 2 || boundary_grid.shape[0] != boundary_grid.shape[1])
        throw ShapeError("solve_darcy_2d: square grid expected, got " +
                         shape_str(boundary_grid.shape));
    const std::size_t g = boundary_grid.shape[0];
    const std::size_t in = g - 2;  // interior nodes per side
    const double h = 1.0 / static_cast<double>(g - 1);
    // -a lap(u) = f  =>  a (4u - sum_nbr) / h^2 = f
    const double diag = 4.0 * a / (h * h);
    const double off = -a / (h * h);

    const std::size_t n = in * in;
    BandedSpd sys(n, in);
    std::vector<double> rhs(n, f);
    auto idx = [in](std::size_t i, std::size_t j) { return i * in + j; };
    for (std::size_t i = 0; i < in; ++i) {
        for (std::size_t j = 0; j < in; ++j) {
            const std::size_t r = idx(i, j);
            sys.at(r, r) = diag;
            if (j > 0) sys.at(r, idx(i, j - 1)) = off;
            if (i > 0) sys.at(r, idx(i - 1, j)) = off;
            // boundary contributions move to the rhs
            const std::size_t gi = i + 1, gj = j + 1;
            if (gj == 1) rhs[r] -= off * boundary_grid.at(gi, 0);
            if (gj == in) rhs[r] -= off * boundary_grid.at(gi, g - 1);
            if (gi == 1) rhs[r] -= off * boundary_grid.at(0, gj);
            if (gi == in) rhs[r] -= off * boundary_grid.at(g - 1, gj);
        }
    }
    BandedSpd factored = sys;
    factored.factor();
    const std::vector<double> sol = factored.solve(rhs);

    // residual check against the unfactored system
    double resid = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < in; ++i) {
        for (std::size_t j = 0; j < in; ++j) {
            const std::size_t r = idx(i, j);
            double ax = diag * sol[r];
            if (j > 0) ax += off * sol[idx(i, j - 1)];
            if (j + 1 < in) ax += off * sol[idx(i, j + 1)];
            if (i > 0) ax += off * sol[idx(i - 1, j)];
            if (i + 1 < in) ax += off * sol[idx(i + 1, j)];
            resid = std::max(resid, std::fabs(ax - rhs[r]));
            scale = std::max(scale, std::fabs(rhs[r]));
        }
    }
    if (resid > 1e-10 * std::max(scale, 1.0))
        throw std::runtime_error("solve_darcy_2d: residual " + std::to_string(resid));

    Tensor field = boundary_grid;
    for (std::size_t i = 0; i < in; ++i)
        for (std::size_t j = 0; j < in; ++j) field.at(i + 1, j + 1) = sol[idx(i, j)];
    return field;
}

Tensor sample_gp_2d_boundary(std::size_t g, double length_scale, std::size_t n,
                             std::uint64_t seed, double jitter) {
    GpConfig cfg;
    cfg.grid = boundary_ring_coords(g);
    cfg.length_scale = length_scale;
    cfg.jitter = jitter;
    const Tensor ring = sample_gp(cfg, n, seed);  // (n x ring)
    Tensor out = Tensor::zeros({n, g * g});
    for (std::size_t s = 0; s < n; ++s) {
        const Tensor row = Tensor::vector(
            std::vector<double>(ring.row_ptr(s), ring.row_ptr(s) + ring.shape[1]));
        const Tensor field = embed_boundary_ring(row, g);
        std::copy(field.data.begin(), field.data.end(), out.row_ptr(s));
    }
    return out;
}

data::FunctionDataset gen_pde1d(const PdeDatasetConfig& cfg) {
    data::FunctionDataset out;
    const Tensor sensors = linspace(0.0, 1.0, kPdeSensors);
    out.coords = Tensor::zeros({kPdeSensors, 1});
    for (std::size_t i = 0; i < kPdeSensors; ++i) out.coords.at(i, 0) = sensors[i];
    GpConfig gp;
    gp.grid = out.coords;
    gp.length_scale = cfg.gp_length_scale;
    const Tensor draws = sample_gp(gp, cfg.n_samples, cfg.seed);
    for (std::size_t s = 0; s < cfg.n_samples; ++s) {
        data::FunctionSample fs;
        fs.sensors = Tensor::vector(
            std::vector<double>(draws.row_ptr(s), draws.row_ptr(s) + kPdeSensors));
        fs.values = solve_poisson_1d(fs.sensors);
        fs.coords = out.coords;
        out.samples.push_back(std::move(fs));
    }
    return out;
}

data::FunctionDataset gen_pde2d(const PdeDatasetConfig& cfg) {
    data::FunctionDataset out;
    const std::size_t g = kDarcyGrid;
    out.coords = Tensor::zeros({g * g, 2});
    const double h = 1.0 / static_cast<double>(g - 1);
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) {
            out.coords.at(i * g + j, 0) = static_cast<double>(j) * h;
            out.coords.at(i * g + j, 1) = static_cast<double>(i) * h;
        }
    const Tensor fields = sample_gp_2d_boundary(g, 0.2, cfg.n_samples, cfg.seed);
    for (std::size_t s = 0; s < cfg.n_samples; ++s) {
        data::FunctionSample fs;
        fs.sensors = Tensor::vector(
            std::vector<double>(fields.row_ptr(s), fields.row_ptr(s) + g * g));
        Tensor bgrid = Tensor::matrix(g, g, fs.sensors.data);
        Tensor sol = solve_darcy_2d(bgrid);
        sol.shape = {g * g};
        fs.values = std::move(sol);
        fs.coords = out.coords;
        out.samples.push_back(std::move(fs));
    }
    return out;
}

data::IntervalDataset build_ideal_intervals_reg1d(const data::PointDataset& base,
                                                  const IdealReg1dConfig& cfg) {
    if (!(cfg.width_min <= cfg.width_max) || cfg.width_min < 0.0)
        throw std::invalid_argument("build_ideal_intervals_reg1d: bad widths");
    const std::size_t n = base.size();
    data::IntervalDataset out;
    out.inputs.lo = Tensor::zeros({n, 1});
    out.inputs.hi = Tensor::zeros({n, 1});
    out.outputs.lo = Tensor::zeros({n, 1});
    out.outputs.hi = Tensor::zeros({n, 1});
    const double margin = cfg.noise_margin_sigmas * cfg.noise_std;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(derive_seed(cfg.seed, 5000 + i));
        const double c = base.inputs.at(i, 0);
        const double l = runif(rng, cfg.width_min, cfg.width_max);
        const double xlo = c - 0.5 * l, xhi = c + 0.5 * l;
        out.inputs.lo.at(i, 0) = xlo;
        out.inputs.hi.at(i, 0) = xhi;
        // dense grid search over the true function (exact-opt mode)
        double fmin = reg1d_true(xlo), fmax = fmin;
        for (std::size_t k = 1; k < cfg.grid_points; ++k) {
            const double x =
                xlo + (xhi - xlo) * static_cast<double>(k) / static_cast<double>(cfg.grid_points - 1);
            const double f = reg1d_true(x);
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
        }
        out.outputs.lo.at(i, 0) = fmin - margin;
        out.outputs.hi.at(i, 0) = fmax + margin;
    }
    return out;
}

IdealPdeResult build_ideal_intervals_pde(const data::FunctionDataset& base, double width_min,
                                         double width_max, std::uint64_t seed, bool darcy) {
    const std::size_t n = base.size();
    const std::size_t m = base.sensor_dim();
    const std::size_t p = base.coords.shape[0];
    IdealPdeResult res;
    res.dataset.coords = base.coords;
    res.dataset.sensors.lo = Tensor::zeros({n, m});
    res.dataset.sensors.hi = Tensor::zeros({n, m});
    res.dataset.values.lo = Tensor::zeros({n, p});
    res.dataset.values.hi = Tensor::zeros({n, p});
    const std::size_t g2d = kDarcyGrid;
    for (std::size_t s = 0; s < n; ++s) {
        Rng rng = make_rng(derive_seed(seed, 6000 + s));
        const double l = runif(rng, width_min, width_max);
        const Tensor& u = base.samples[s].sensors;
        Tensor ulo = u, uhi = u;
        if (darcy) {
            // widths apply to the boundary ring only; interior encoding stays 0
            for (std::size_t i = 0; i < g2d; ++i)
                for (std::size_t j = 0; j < g2d; ++j)
                    if (i == 0 || i + 1 == g2d || j == 0 || j + 1 == g2d) {
                        ulo[i * g2d + j] -= 0.5 * l;
                        uhi[i * g2d + j] += 0.5 * l;
                    }
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                ulo[i] -= 0.5 * l;
                uhi[i] += 0.5 * l;
            }
        }
        Tensor ga, gb;
        if (darcy) {
            Tensor sa = solve_darcy_2d(Tensor::matrix(g2d, g2d, ulo.data));
            Tensor sb = solve_darcy_2d(Tensor::matrix(g2d, g2d, uhi.data));
            sa.shape = {p};
            sb.shape = {p};
            ga = std::move(sa);
            gb = std::move(sb);
        } else {
            ga = solve_poisson_1d(ulo);
            gb = solve_poisson_1d(uhi);
        }
        bool a_below = false, b_below = false;
        for (std::size_t j = 0; j < p; ++j) {
            if (ga[j] < gb[j]) a_below = true;
            if (gb[j] < ga[j]) b_below = true;
        }
        std::size_t minority = 0;
        if (a_below && b_below) {
            std::size_t cnt_a = 0, cnt_b = 0;
            for (std::size_t j = 0; j < p; ++j) {
                if (ga[j] < gb[j]) ++cnt_a;
                else if (gb[j] < ga[j]) ++cnt_b;
            }
            minority = std::min(cnt_a, cnt_b);
        }
        res.nonmonotone_points += minority;
        for (std::size_t i = 0; i < m; ++i) {
            res.dataset.sensors.lo.at(s, i) = ulo[i];
            res.dataset.sensors.hi.at(s, i) = uhi[i];
        }
        for (std::size_t j = 0; j < p; ++j) {
            res.dataset.values.lo.at(s, j) = std::min(ga[j], gb[j]);
            res.dataset.values.hi.at(s, j) = std::max(ga[j], gb[j]);
        }
    }
    return res;
}

}  // namespace ivp::gen
