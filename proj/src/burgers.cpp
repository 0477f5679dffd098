// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "mufno/io_util.hpp"

namespace mufno {

double grf_unit_std_sigma(double tau, double alpha, int max_mode) {
    double sum = 0.0;
    for (int j = 1; j <= max_mode; ++j) sum += std::pow(4.0 * M_PI * M_PI * j * j + tau * tau, -alpha);
    return 1.0 / std::sqrt(2.0 * sum);
}

void BurgersConfig::validate() const {
    if (!(nu > 0.0)) throw ConfigError("burgers: nu must be positive");
    if (!(T > 0.0)) throw ConfigError("burgers: T must be positive");
    if (grid_n_solver < 4 || !is_pow2(static_cast<std::size_t>(grid_n_solver)))
        throw ConfigError("burgers: grid_n_solver must be a power of two >= 4");
    if (grid_n_train < 4 || !is_pow2(static_cast<std::size_t>(grid_n_train)))
        throw ConfigError("burgers: grid_n_train must be a power of two >= 4");
    if (grid_n_solver % grid_n_train != 0) throw ConfigError("burgers: grid_n_train must divide grid_n_solver");
    if (n_train < 1 || n_eval < 1) throw ConfigError("burgers: sample counts must be >= 1");
    if (steps < 1) throw ConfigError("burgers: steps must be >= 1");
    if (!(grf.sigma >= 0.0)) throw ConfigError("burgers: grf.sigma must be >= 0");
    if (!(grf.alpha > 0.0)) throw ConfigError("burgers: grf.alpha must be positive");
}

std::vector<double> sample_grf(const GrfParams& grf, const Grid1D& grid, SeededRng& rng) {
    grid.validate();
    const std::size_t n = grid.n;
    std::vector<cdouble> spec(n / 2 + 1, cdouble(0.0, 0.0));
    const double nf = static_cast<double>(n);
    for (std::size_t j = 1; j < n / 2; ++j) {
        const double density = grf.sigma * grf.sigma * std::pow(4.0 * M_PI * M_PI * j * j + grf.tau * grf.tau, -grf.alpha);
        const double amp = nf * std::sqrt(0.5 * density);
        const double re = amp * rng.next_gaussian();
        const double im = amp * rng.next_gaussian();
        spec[j] = cdouble(re, im);
    }
    return irfft(spec, n);
}

std::vector<double> solve_burgers(std::span<const double> u0, double nu, double T, int steps, bool include_nonlinear) {
    const std::size_t n = u0.size();
    if (n < 4 || !is_pow2(n)) throw SizeError("solve_burgers: n must be a power of two >= 4");
    if (!(nu > 0.0)) throw SolverError("solve_burgers: nu must be positive");
    if (steps < 1) throw SolverError("solve_burgers: steps must be >= 1");

    const double dt = T / steps;
    const std::size_t bins = n / 2 + 1;
    const std::size_t kmax_dealias = n / 3;  // keep |j| <= n/3

    double umax = 0.0;
    for (double u : u0) umax = std::max(umax, std::abs(u));

    if (include_nonlinear && umax > 0.0) {
        // CFL-style pre-check: a mode is stable if either RK4 resolves its
        // advection (dt*u*k small) or the exact viscous factor dominates
        // (nu*k^2*dt >= 1). The binding constraint sits at the smaller of the
        // dealiasing cutoff and the viscous crossover wavenumber.
        const double k_dealias = 2.0 * M_PI * static_cast<double>(kmax_dealias);
        const double k_visc = 1.0 / std::sqrt(nu * dt);
        const double k_eff = std::min(k_dealias, k_visc);
        const double cfl = dt * 1.25 * umax * k_eff;
        if (cfl > 2.5)
            throw SolverError("solve_burgers: CFL pre-check failed (dt*u*k = " + std::to_string(cfl) +
                              " > 2.5); increase steps");
    }

    Fft plan(n);
    std::vector<cdouble> uhat(bins);
    plan.forward(u0, uhat);
    for (std::size_t j = kmax_dealias + 1; j < bins; ++j) uhat[j] = cdouble(0.0, 0.0);

    std::vector<double> e_half(bins), e_full(bins);
    for (std::size_t j = 0; j < bins; ++j) {
        const double k = 2.0 * M_PI * static_cast<double>(j);
        e_half[j] = std::exp(-nu * k * k * dt * 0.5);
        e_full[j] = e_half[j] * e_half[j];
    }

    std::vector<double> phys(n), flux(n);
    std::vector<cdouble> fhat(bins);
    auto rhs = [&](const std::vector<cdouble>& what, std::vector<cdouble>& out) {
        if (!include_nonlinear) {
            std::fill(out.begin(), out.end(), cdouble(0.0, 0.0));
            return;
        }
        plan.inverse(what, phys);
        for (std::size_t i = 0; i < n; ++i) flux[i] = 0.5 * phys[i] * phys[i];
        plan.forward(flux, fhat);
        for (std::size_t j = 0; j < bins; ++j) {
            if (j > kmax_dealias) {
                out[j] = cdouble(0.0, 0.0);
            } else {
                const double k = 2.0 * M_PI * static_cast<double>(j);
                out[j] = cdouble(0.0, -k) * fhat[j];  // -ik * flux_hat
            }
        }
    };

    std::vector<cdouble> n1(bins), n2(bins), n3(bins), n4(bins), stage(bins);
    double last_norm2 = 0.0;
    auto spectral_norm2 = [&]() {
        // Parseval with the unnormalized-forward convention.
        double acc = std::norm(uhat[0]) + std::norm(uhat[n / 2]);
        for (std::size_t j = 1; j < n / 2; ++j) acc += 2.0 * std::norm(uhat[j]);
        return acc / static_cast<double>(n);
    };
    last_norm2 = spectral_norm2();

    for (int step = 0; step < steps; ++step) {
        rhs(uhat, n1);
        for (std::size_t j = 0; j < bins; ++j) stage[j] = e_half[j] * (uhat[j] + 0.5 * dt * n1[j]);
        rhs(stage, n2);
        for (std::size_t j = 0; j < bins; ++j) stage[j] = e_half[j] * uhat[j] + 0.5 * dt * n2[j];
        rhs(stage, n3);
        for (std::size_t j = 0; j < bins; ++j) stage[j] = e_full[j] * uhat[j] + dt * e_half[j] * n3[j];
        rhs(stage, n4);
        for (std::size_t j = 0; j < bins; ++j)
            uhat[j] = e_full[j] * uhat[j] +
                      (dt / 6.0) * (e_full[j] * n1[j] + 2.0 * e_half[j] * (n2[j] + n3[j]) + n4[j]);

        if ((step + 1) % 100 == 0 || step + 1 == steps) {
            const double norm2 = spectral_norm2();
            if (!std::isfinite(norm2) || (last_norm2 > 0.0 && norm2 > 100.0 * last_norm2))
                throw SolverError("solve_burgers: divergence detected at step " + std::to_string(step + 1));
            last_norm2 = norm2;
        }
    }

    std::vector<double> out(n);
    plan.inverse(uhat, out);
    return out;
}

namespace {

void generate_range(const BurgersConfig& config, const SeededRng& split_rng, int first, int count, int stride,
                    const Grid1D& solver_grid, Tensor3& inputs, Tensor3& targets, const char* split_name) {
    for (int s = first; s < first + count; ++s) {
        SeededRng rng = split_rng.substream(static_cast<std::uint64_t>(s));
        const std::vector<double> u0 = sample_grf(config.grf, solver_grid, rng);
        std::vector<double> u1;
        try {
            u1 = solve_burgers(u0, config.nu, config.T, config.steps);
        } catch (const SolverError& e) {
            throw SolverError(std::string(split_name) + " sample " + std::to_string(s) + ": " + e.what());
        }
        for (std::size_t j = 0; j < inputs.n; ++j) {
            inputs.at(s, j, 0) = u0[j * stride];
            targets.at(s, j, 0) = u1[j * stride];
        }
    }
}

Dataset generate_split(const BurgersConfig& config, const SeededRng& split_rng, int count, const char* split_name,
                       int parallelism) {
    const Grid1D solver_grid(static_cast<std::size_t>(config.grid_n_solver));
    const Grid1D train_grid(static_cast<std::size_t>(config.grid_n_train));
    const int stride = config.grid_n_solver / config.grid_n_train;

    Dataset ds;
    ds.grid = train_grid;
    ds.inputs = Tensor3(count, train_grid.n, 1);
    ds.targets = Tensor3(count, train_grid.n, 1);

    const int workers = std::max(1, std::min(parallelism, count));
    if (workers == 1) {
        generate_range(config, split_rng, 0, count, stride, solver_grid, ds.inputs, ds.targets, split_name);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr error;
        std::mutex error_mu;
        const int chunk = (count + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int first = w * chunk;
            const int cnt = std::min(chunk, count - first);
            if (cnt <= 0) break;
            pool.emplace_back([&, first, cnt] {
                try {
                    generate_range(config, split_rng, first, cnt, stride, solver_grid, ds.inputs, ds.targets, split_name);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    return ds;
}

}  // namespace

DatasetPair build_dataset(const BurgersConfig& config, int parallelism) {
    config.validate();
    const SeededRng root(config.seed);
    DatasetPair pair;
    pair.train = generate_split(config, root.substream(0), config.n_train, "train", parallelism);
    pair.eval = generate_split(config, root.substream(1), config.n_eval, "eval", parallelism);
    return pair;
}

// ---------------------------------------------------------------------------
// FNOD dataset files
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kFnodMagic = 0x444F4E46u;  // "FNOD" little-endian
constexpr std::uint32_t kFnodVersion = 1;
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    if (ds.inputs.b != ds.targets.b || ds.inputs.n != ds.targets.n || ds.inputs.c != ds.targets.c)
        throw SizeError("save_dataset: inputs/targets shapes differ");
    if (ds.inputs.n != ds.grid.n) throw SizeError("save_dataset: grid does not match tensor resolution");
    ByteWriter w;
    w.u32(kFnodMagic);
    w.u32(kFnodVersion);
    w.u32(1);  // d
    w.u64(ds.inputs.b);
    w.u64(ds.inputs.n);
    w.u32(static_cast<std::uint32_t>(ds.inputs.c));
    w.f64_array(ds.inputs.v);
    w.f64_array(ds.targets.v);
    w.u64(crc64(w.data()));
    w.write_file(path);
}

Dataset load_dataset(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    if (r.all().size() < 8) r.fail("file too small for FNOD header");
    if (r.u32() != kFnodMagic) r.fail("bad magic, not an FNOD dataset");
    const std::uint32_t version = r.u32();
    if (version != kFnodVersion) r.fail("unsupported FNOD version " + std::to_string(version));
    const std::uint32_t d = r.u32();
    if (d != 1) r.fail("unsupported dimensionality d=" + std::to_string(d));
    const std::uint64_t N = r.u64();
    const std::uint64_t n = r.u64();
    const std::uint32_t channels = r.u32();
    if (N == 0 || n < 4 || !is_pow2(n) || channels == 0) r.fail("implausible FNOD shape header");
    const std::uint64_t payload_doubles = 2 * N * n * channels;
    if (r.remaining() != payload_doubles * sizeof(double) + sizeof(std::uint64_t))
        r.fail("file size does not match shape header");

    Dataset ds;
    ds.grid = Grid1D(n);
    ds.inputs = Tensor3(N, n, channels);
    ds.targets = Tensor3(N, n, channels);
    r.f64_array(ds.inputs.v);
    r.f64_array(ds.targets.v);
    const std::uint64_t stored = r.u64();
    const std::uint64_t actual = crc64(r.all().subspan(0, r.all().size() - sizeof(std::uint64_t)));
    if (stored != actual) r.fail("CRC64 mismatch: file is corrupt");
    return ds;
}

}  // namespace mufno
