// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mufno/autodiff.hpp"
#include "mufno/io_util.hpp"
#include "mufno/optimizer.hpp"

namespace mufno {

namespace {

struct Dense {
    std::size_t n = 0;
    std::vector<double> a;  // row-major n x n
    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// y = A^T (A x)
void gram_apply(const Dense& A, std::span<const double> x, std::span<double> tmp, std::span<double> y) {
    const std::size_t n = A.n;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        const double* row = A.a.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        tmp[i] = acc;
    }
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = A.a.data() + i * n;
        const double t = tmp[i];
        for (std::size_t j = 0; j < n; ++j) y[j] += row[j] * t;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

double spectral_norm_exact(const SpectralConvParams& sp, const Grid1D& grid) {
    grid.validate();
    if (sp.m != 1) throw SizeError("spectral_norm_exact: dense assembly requires m=1");
    if (static_cast<std::size_t>(sp.K) > grid.n / 2) throw SizeError("spectral_norm_exact: K exceeds n/2");

    const std::size_t n = grid.n;
    Dense A;
    A.n = n;
    A.a.resize(n * n);
    {
        Fft plan(n);
        SpectralWorkspace ws;
        std::vector<double> unit(n, 0.0), col(n);
        for (std::size_t j = 0; j < n; ++j) {
            unit[j] = 1.0;
            spectral_conv_apply(sp, plan, unit, col, ws);
            unit[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) A.a[i * n + j] = col[i];
        }
    }

    double frob2 = 0;
    for (double v : A.a) frob2 += v * v;
    if (frob2 == 0.0) return 0.0;

    // Two-vector orthogonal iteration on A^T A with Rayleigh-Ritz: a single
    // power vector stalls when the top two singular values nearly tie, which
    // random draws hit often enough to matter at 1e-8 accuracy.
    SeededRng rng(0x5eed5eedull);
    std::vector<double> v1(n), v2(n), w1(n), w2(n), tmp(n);
    rng.fill_gaussian(v1, 0.0, 1.0);
    rng.fill_gaussian(v2, 0.0, 1.0);
    const double inv1 = 1.0 / norm(v1);
    for (auto& x : v1) x *= inv1;
    const double proj = dot(v1, v2);
    for (std::size_t i = 0; i < n; ++i) v2[i] -= proj * v1[i];
    const double inv2 = 1.0 / norm(v2);
    for (auto& x : v2) x *= inv2;

    constexpr int kMaxIters = 10000;
    constexpr double kTol = 1e-10;
    double lambda_prev = -1.0;
    for (int it = 0; it < kMaxIters; ++it) {
        gram_apply(A, v1, tmp, w1);
        gram_apply(A, v2, tmp, w2);

        // Rayleigh-Ritz on span{v1, v2}: M = V^T (A^T A) V, 2x2 symmetric.
        const double m11 = dot(v1, w1), m12 = dot(v1, w2), m22 = dot(v2, w2);
        const double tr = m11 + m22;
        const double det = m11 * m22 - m12 * m12;
        const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
        const double lambda = 0.5 * (tr + disc);

        if (lambda_prev >= 0.0 && std::abs(lambda - lambda_prev) <= kTol * std::max(lambda, 1e-300)) {
            return std::sqrt(lambda);
        }
        lambda_prev = lambda;

        // next basis = orthonormalized {w1, w2}
        const double nw1 = norm(w1);
        if (nw1 == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v1[i] = w1[i] / nw1;
        const double p = dot(v1, w2);
        for (std::size_t i = 0; i < n; ++i) w2[i] -= p * v1[i];
        double nw2 = norm(w2);
        if (nw2 < 1e-300) {
            // degenerate block: re-seed the second direction
            rng.fill_gaussian(w2, 0.0, 1.0);
            const double q = dot(v1, w2);
            for (std::size_t i = 0; i < n; ++i) w2[i] -= q * v1[i];
            nw2 = norm(w2);
        }
        for (std::size_t i = 0; i < n; ++i) v2[i] = w2[i] / nw2;
    }
    gram_apply(A, v1, tmp, w1);
    const double lambda = dot(v1, w1);
    double resid = 0;
    for (std::size_t i = 0; i < n; ++i) resid += (w1[i] - lambda * v1[i]) * (w1[i] - lambda * v1[i]);
    throw NumericError("spectral_norm_exact: power iteration did not converge (residual " +
                       std::to_string(std::sqrt(resid)) + ")");
}

// ---------------------------------------------------------------------------
// Max-of-Gaussians Monte Carlo
// ---------------------------------------------------------------------------

NormScalingRow max_gaussian_mc(int K, int d, double b, int n_trials, SeededRng& rng) {
    if (K < 2) throw ConfigError("max_gaussian_mc: K must be >= 2");
    if (n_trials < 1) throw ConfigError("max_gaussian_mc: n_trials must be >= 1");
    if (d < 1) throw ConfigError("max_gaussian_mc: d must be >= 1");
    double count = std::pow(static_cast<double>(K), d);
    if (count > static_cast<double>(1 << 24)) throw ConfigError("max_gaussian_mc: K^d exceeds 2^24");
    const std::size_t kd = static_cast<std::size_t>(count);

    double acc = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        double mx = 0.0;
        for (std::size_t i = 0; i < kd; ++i) mx = std::max(mx, std::abs(b * rng.next_gaussian()));
        acc += mx;
    }
    NormScalingRow row;
    row.K = K;
    row.d = d;
    row.b = b;
    row.trials = n_trials;
    row.mean_max_abs = acc / n_trials;
    row.predicted = b * std::sqrt(2.0 * d * std::log(static_cast<double>(K)));
    return row;
}

NormScalingReport norm_scaling_report(const std::vector<int>& Ks, const std::vector<int>& ds,
                                      const std::vector<double>& bs, int n_trials, std::uint64_t seed) {
    NormScalingReport report;
    const SeededRng root(seed);
    std::uint64_t cell = 0;
    for (int d : ds)
        for (double b : bs)
            for (int K : Ks) {
                SeededRng rng = root.substream(cell++);
                report.rows.push_back(max_gaussian_mc(K, d, b, n_trials, rng));
            }

    // least squares of mean_max_abs against b sqrt(d ln K)
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double nobs = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
        const double x = r.b * std::sqrt(r.d * std::log(static_cast<double>(r.K)));
        const double y = r.mean_max_abs;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double denom = nobs * sxx - sx * sx;
    report.slope = (nobs * sxy - sx * sy) / denom;
    report.intercept = (sy - report.slope * sx) / nobs;
    double ss_res = 0;
    const double ybar = sy / nobs;
    double ss_tot = 0;
    for (const auto& r : report.rows) {
        const double x = r.b * std::sqrt(r.d * std::log(static_cast<double>(r.K)));
        const double e = r.mean_max_abs - (report.slope * x + report.intercept);
        ss_res += e * e;
        ss_tot += (r.mean_max_abs - ybar) * (r.mean_max_abs - ybar);
    }
    report.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return report;
}

void write_normscaling_csv(std::ostream& os, const NormScalingReport& report, bool with_header) {
    if (with_header) os << "K,d,b,trials,mean_max_abs,predicted\n";
    for (const auto& r : report.rows)
        os << r.K << ',' << r.d << ',' << format_double(r.b) << ',' << r.trials << ',' << format_double(r.mean_max_abs)
           << ',' << format_double(r.predicted) << '\n';
}

// ---------------------------------------------------------------------------
// Coordinate checks
// ---------------------------------------------------------------------------

namespace {

struct BatchFeatures {
    std::vector<std::vector<double>> preact;  // [L][B*n*m]
    std::vector<std::vector<double>> act;     // [L][B*n*m]
    std::vector<double> h0;                   // [B*n*m]
};

BatchFeatures collect_features(const ModelParams& params, const FnoConfig& config, const Tensor3& batch, const Fft& plan) {
    BatchFeatures f;
    const std::size_t nm = batch.n * static_cast<std::size_t>(config.m);
    f.h0.resize(batch.b * nm);
    f.preact.assign(config.L, std::vector<double>(batch.b * nm));
    f.act.assign(config.L, std::vector<double>(batch.b * nm));
    SampleTrace trace;
    SpectralWorkspace ws;
    for (std::size_t s = 0; s < batch.b; ++s) {
        forward_sample(params, config, batch.v.data() + s * batch.n * batch.c, batch.n, plan, trace, ws);
        std::copy(trace.h0.begin(), trace.h0.end(), f.h0.begin() + s * nm);
        for (int l = 0; l < config.L; ++l) {
            std::copy(trace.preact[l].begin(), trace.preact[l].end(), f.preact[l].begin() + s * nm);
            std::copy(trace.act[l].begin(), trace.act[l].end(), f.act[l].begin() + s * nm);
        }
    }
    return f;
}

double rms(std::span<const double> v) {
    double acc = 0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double rms_diff(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

std::vector<FeatureTrace> coord_check(const FnoConfig& model_template, const Parametrization& param,
                                      const std::vector<int>& K_list, int steps, const Dataset& probe,
                                      const HyperParams& xi, const std::vector<std::uint64_t>& seeds) {
    if (K_list.empty() || seeds.empty()) throw ConfigError("coord_check: K_list and seeds must be nonempty");
    if (steps < 0) throw ConfigError("coord_check: steps must be >= 0");
    xi.validate();

    const std::size_t n = probe.grid.n;
    const std::size_t batch_count = std::min<std::size_t>(xi.batch_size, probe.inputs.b);
    Tensor3 bx(batch_count, n, probe.inputs.c), by(batch_count, n, probe.targets.c);
    std::copy_n(probe.inputs.v.data(), bx.v.size(), bx.v.data());
    std::copy_n(probe.targets.v.data(), by.v.size(), by.v.data());

    std::vector<FeatureTrace> traces;
    for (int K : K_list) {
        FnoConfig config = model_template;
        config.K = K;
        config.validate_for_grid(n);
        const double spectral_base_lr = xi.spectral_lr ? *xi.spectral_lr : abc_at(param, K).c * xi.master_lr;

        for (std::uint64_t seed : seeds) {
            const SeededRng root(seed);
            SeededRng init_rng = root.substream(0);
            ModelParams params0 = init_params(config, param, init_rng);

            Fft plan(n);
            const BatchFeatures init_features = collect_features(params0, config, bx, plan);

            FeatureTrace trace;
            trace.K = K;
            trace.seed = seed;
            trace.h_init_rms.push_back(rms(init_features.h0));
            for (int l = 0; l < config.L; ++l) {
                trace.w_init_rms.push_back(rms(init_features.preact[l]));
                trace.h_init_rms.push_back(rms(init_features.act[l]));
            }

            // t optimizer steps on the fixed mini-batch
            ModelParams params = params0;
            AdamState state = AdamState::init(params, xi.adam_beta1, xi.adam_beta2, xi.adam_eps);
            const LrGroups lr{spectral_base_lr, xi.master_lr};
            for (int t = 0; t < steps; ++t) {
                auto res = backward(params, config, bx, by);
                if (xi.clip_value && xi.clip_stage == ClipStage::gradient)
                    clip_elementwise(res.grads, *xi.clip_value, xi.clip_scope);
                const std::optional<double> update_clip =
                    (xi.clip_value && xi.clip_stage == ClipStage::update) ? xi.clip_value : std::nullopt;
                adam_step(params, res.grads, state, lr, update_clip, xi.clip_scope);
            }

            const BatchFeatures now = collect_features(params, config, bx, plan);
            for (int l = 0; l < config.L; ++l) trace.dw_rms.push_back(rms_diff(now.preact[l], init_features.preact[l]));

            // Lemma-style spectral update action: (r_t - r_0) applied to the
            // current layer inputs.
            SpectralWorkspace ws;
            const std::size_t nm = n * static_cast<std::size_t>(config.m);
            std::vector<double> delta_out(nm);
            for (int l = 0; l < config.L; ++l) {
                SpectralConvParams delta = params.spectral[l];
                for (std::size_t i = 0; i < delta.r.size(); ++i) delta.r[i] -= params0.spectral[l].r[i];
                const std::vector<double>& h_in = l == 0 ? now.h0 : now.act[l - 1];
                double acc = 0;
                for (std::size_t s = 0; s < batch_count; ++s) {
                    spectral_conv_apply(delta, plan, std::span<const double>(h_in.data() + s * nm, nm), delta_out, ws);
                    for (double x : delta_out) acc += x * x;
                }
                trace.dkh_rms.push_back(std::sqrt(acc / static_cast<double>(batch_count * nm)));
            }
            traces.push_back(std::move(trace));
        }
    }
    return traces;
}

void write_coordcheck_csv(std::ostream& os, const std::vector<FeatureTrace>& traces,
                          const std::string& parametrization_label, bool with_header) {
    if (with_header) os << "parametrization,K,seed,layer,quantity,rms\n";
    for (const auto& t : traces) {
        for (std::size_t l = 0; l < t.h_init_rms.size(); ++l)
            os << parametrization_label << ',' << t.K << ',' << t.seed << ',' << l << ",h_init,"
               << format_double(t.h_init_rms[l]) << '\n';
        for (std::size_t l = 0; l < t.w_init_rms.size(); ++l)
            os << parametrization_label << ',' << t.K << ',' << t.seed << ',' << l + 1 << ",w_init,"
               << format_double(t.w_init_rms[l]) << '\n';
        for (std::size_t l = 0; l < t.dw_rms.size(); ++l)
            os << parametrization_label << ',' << t.K << ',' << t.seed << ',' << l + 1 << ",dw_t,"
               << format_double(t.dw_rms[l]) << '\n';
        for (std::size_t l = 0; l < t.dkh_rms.size(); ++l)
            os << parametrization_label << ',' << t.K << ',' << t.seed << ',' << l + 1 << ",dKh_t,"
               << format_double(t.dkh_rms[l]) << '\n';
    }
}

}  // namespace mufno
