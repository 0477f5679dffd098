// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/model.hpp"

#include <cmath>

#include "mufno/io_util.hpp"

namespace mufno {

void FnoConfig::validate() const {
    if (d != 1) throw ConfigError("fno: only d=1 is implemented, got d=" + std::to_string(d));
    if (L < 1) throw ConfigError("fno: L must be >= 1");
    if (m < 1) throw ConfigError("fno: m must be >= 1");
    if (K < 1) throw ConfigError("fno: K must be >= 1");
    if (in_channels < 1 || out_channels < 1) throw ConfigError("fno: channel counts must be >= 1");
}

void FnoConfig::validate_for_grid(std::size_t n) const {
    validate();
    if (static_cast<std::size_t>(K) > n / 2)
        throw SizeError("fno: K=" + std::to_string(K) + " exceeds n/2=" + std::to_string(n / 2));
}

SpectralConvParams SpectralConvParams::zeros(int K, int m) {
    SpectralConvParams sp;
    sp.K = K;
    sp.m = m;
    sp.r.assign(static_cast<std::size_t>(K) * m * m, cdouble(0.0, 0.0));
    return sp;
}

std::size_t ModelParams::scalar_count() const {
    std::size_t count = P.w.size() + P.b.size() + Q1.w.size() + Q1.b.size() + Q2.w.size() + Q2.b.size();
    for (const auto& w : W) count += w.w.size() + w.b.size();
    for (const auto& sp : spectral) {
        const std::size_t mm = static_cast<std::size_t>(sp.m) * sp.m;
        count += sp.real_r_mode ? sp.r.size() : mm + (sp.r.size() - mm) * 2;
    }
    return count;
}

namespace {

void fill_fan_in(Affine& a, SeededRng& rng) {
    const double std = 1.0 / std::sqrt(static_cast<double>(a.in));
    rng.fill_gaussian(a.w, 0.0, std);
    // biases stay zero
}

void fill_spectral(SpectralConvParams& sp, double init_std, SeededRng& rng) {
    const double split_std = init_std / std::sqrt(2.0);
    for (int k = 0; k < sp.K; ++k) {
        const bool force_real = sp.real_r_mode || k == 0;
        for (int o = 0; o < sp.m; ++o) {
            for (int i = 0; i < sp.m; ++i) {
                if (force_real) {
                    sp.rat(k, o, i) = cdouble(init_std * rng.next_gaussian(), 0.0);
                } else {
                    const double re = split_std * rng.next_gaussian();
                    const double im = split_std * rng.next_gaussian();
                    sp.rat(k, o, i) = cdouble(re, im);
                }
            }
        }
    }
}

}  // namespace

ModelParams init_params_abc(const FnoConfig& config, const AbcValues& abc, const SeededRng& rng) {
    config.validate();
    ModelParams p;
    p.P = Affine::zeros(config.m, config.lifted_in_channels());
    p.Q1 = Affine::zeros(config.m, config.m);
    p.Q2 = Affine::zeros(config.out_channels, config.m);
    p.W.resize(config.L);
    p.spectral.resize(config.L);

    // Fixed substream per tensor so the draw order never depends on layout.
    std::uint64_t stream = 0;
    auto next = [&] { return rng.substream(stream++); };
    SeededRng rp = next();
    fill_fan_in(p.P, rp);
    SeededRng rq1 = next();
    fill_fan_in(p.Q1, rq1);
    SeededRng rq2 = next();
    fill_fan_in(p.Q2, rq2);
    for (int l = 0; l < config.L; ++l) {
        p.W[l] = Affine::zeros(config.m, config.m);
        SeededRng rw = next();
        fill_fan_in(p.W[l], rw);
    }
    for (int l = 0; l < config.L; ++l) {
        p.spectral[l] = SpectralConvParams::zeros(config.K, config.m);
        p.spectral[l].a_scale = abc.a;
        p.spectral[l].real_r_mode = config.real_r_mode;
        SeededRng rs = next();
        fill_spectral(p.spectral[l], abc.b, rs);
    }
    return p;
}

ModelParams init_params(const FnoConfig& config, const Parametrization& p, const SeededRng& rng) {
    return init_params_abc(config, abc_at(p, config.K), rng);
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

// y[p][o] = sum_i w[o][i] x[p][i] + b[o], over npos positions
void affine_apply(const Affine& a, const double* x, double* y, std::size_t npos) {
    for (std::size_t pos = 0; pos < npos; ++pos) {
        const double* xp = x + pos * a.in;
        double* yp = y + pos * a.out;
        for (int o = 0; o < a.out; ++o) {
            double acc = a.b[o];
            const double* wrow = a.w.data() + static_cast<std::size_t>(o) * a.in;
            for (int i = 0; i < a.in; ++i) acc += wrow[i] * xp[i];
            yp[o] = acc;
        }
    }
}

}  // namespace

void spectral_conv_apply(const SpectralConvParams& sp, const Fft& plan, std::span<const double> v, std::span<double> out,
                         SpectralWorkspace& ws) {
    const std::size_t n = plan.n();
    const std::size_t bins = plan.bins();
    const int m = sp.m;
    const int K = sp.K;
    if (static_cast<std::size_t>(K) > n / 2)
        throw SizeError("spectral_conv: K=" + std::to_string(K) + " exceeds n/2=" + std::to_string(n / 2));
    if (v.size() != n * static_cast<std::size_t>(m) || out.size() != v.size())
        throw SizeError("spectral_conv: tensor must be [n x m]");

    ws.chan.resize(n);
    ws.spec.resize(bins);
    ws.vhat.resize(static_cast<std::size_t>(K) * m);
    ws.yhat.assign(bins, cdouble(0.0, 0.0));

    // Channel-wise forward transform; only the lowest K bins are retained.
    for (int i = 0; i < m; ++i) {
        for (std::size_t pos = 0; pos < n; ++pos) ws.chan[pos] = v[pos * m + i];
        plan.forward(ws.chan, ws.spec);
        for (int k = 0; k < K; ++k) ws.vhat[static_cast<std::size_t>(k) * m + i] = ws.spec[k];
    }

    for (int o = 0; o < m; ++o) {
        for (int k = 0; k < K; ++k) {
            cdouble acc(0.0, 0.0);
            const cdouble* rrow = sp.r.data() + (static_cast<std::size_t>(k) * m + o) * m;
            const cdouble* vk = ws.vhat.data() + static_cast<std::size_t>(k) * m;
            for (int i = 0; i < m; ++i) acc += rrow[i] * vk[i];
            ws.yhat[k] = sp.a_scale * acc;
        }
        for (std::size_t k = K; k < bins; ++k) ws.yhat[k] = cdouble(0.0, 0.0);
        plan.inverse(ws.yhat, ws.chan);
        for (std::size_t pos = 0; pos < n; ++pos) out[pos * m + o] = ws.chan[pos];
    }
}

std::vector<double> spectral_conv_apply(const SpectralConvParams& sp, std::span<const double> v, std::size_t n) {
    Fft plan(n);
    SpectralWorkspace ws;
    std::vector<double> out(v.size());
    spectral_conv_apply(sp, plan, v, out, ws);
    return out;
}

void forward_sample(const ModelParams& params, const FnoConfig& config, const double* in, std::size_t n, const Fft& plan,
                    SampleTrace& t, SpectralWorkspace& ws) {
    const int m = config.m;
    const int cin = config.in_channels;
    const int lifted_c = config.lifted_in_channels();
    const std::size_t nm = n * static_cast<std::size_t>(m);

    t.lifted.resize(n * static_cast<std::size_t>(lifted_c));
    for (std::size_t pos = 0; pos < n; ++pos) {
        for (int c = 0; c < cin; ++c) t.lifted[pos * lifted_c + c] = in[pos * cin + c];
        if (config.coord_channel) t.lifted[pos * lifted_c + cin] = static_cast<double>(pos) / static_cast<double>(n);
    }

    t.h0.resize(nm);
    affine_apply(params.P, t.lifted.data(), t.h0.data(), n);

    t.preact.resize(config.L);
    t.act.resize(config.L);
    std::vector<double> spectral_out(nm);
    const double* h = t.h0.data();
    for (int l = 0; l < config.L; ++l) {
        t.preact[l].resize(nm);
        t.act[l].resize(nm);
        affine_apply(params.W[l], h, t.preact[l].data(), n);
        spectral_conv_apply(params.spectral[l], plan, std::span<const double>(h, nm), spectral_out, ws);
        for (std::size_t i = 0; i < nm; ++i) t.preact[l][i] += spectral_out[i];
        for (std::size_t i = 0; i < nm; ++i) t.act[l][i] = activate(config.activation, t.preact[l][i]);
        h = t.act[l].data();
    }

    t.q1_pre.resize(nm);
    t.q1_act.resize(nm);
    affine_apply(params.Q1, h, t.q1_pre.data(), n);
    for (std::size_t i = 0; i < nm; ++i) t.q1_act[i] = activate(config.activation, t.q1_pre[i]);
    t.out.resize(n * static_cast<std::size_t>(config.out_channels));
    affine_apply(params.Q2, t.q1_act.data(), t.out.data(), n);
}

Tensor3 forward(const ModelParams& params, const FnoConfig& config, const Tensor3& input) {
    config.validate_for_grid(input.n);
    if (input.c != static_cast<std::size_t>(config.in_channels))
        throw SizeError("forward: input has " + std::to_string(input.c) + " channels, config expects " +
                        std::to_string(config.in_channels));
    if (!is_pow2(input.n)) throw SizeError("forward: grid size must be a power of two");

    Fft plan(input.n);
    SpectralWorkspace ws;
    SampleTrace trace;
    Tensor3 out(input.b, input.n, config.out_channels);
    for (std::size_t s = 0; s < input.b; ++s) {
        forward_sample(params, config, input.v.data() + s * input.n * input.c, input.n, plan, trace, ws);
        double* dst = out.v.data() + s * out.n * out.c;
        for (std::size_t i = 0; i < trace.out.size(); ++i) {
            if (std::isnan(trace.out[i])) throw NumericError("forward: NaN in output at sample " + std::to_string(s));
            dst[i] = trace.out[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kMufnMagic = 0x4E46554Du;  // "MUFN" little-endian
constexpr std::uint32_t kMufnVersion = 1;

void write_tensor(ByteWriter& w, std::span<const double> data, std::initializer_list<std::uint64_t> dims) {
    w.u64(dims.size());
    std::uint64_t total = 1;
    for (auto d : dims) {
        w.u64(d);
        total *= d;
    }
    if (total != data.size()) throw FormatError("checkpoint: tensor dims do not match data size");
    w.f64_array(data);
}

std::vector<double> read_tensor(ByteReader& r, std::initializer_list<std::uint64_t> expect_dims) {
    const std::uint64_t rank = r.u64();
    if (rank != expect_dims.size()) r.fail("unexpected tensor rank " + std::to_string(rank));
    std::uint64_t total = 1;
    std::size_t i = 0;
    for (auto expected : expect_dims) {
        const std::uint64_t d = r.u64();
        if (d != expected)
            r.fail("tensor dim " + std::to_string(i) + " is " + std::to_string(d) + ", expected " + std::to_string(expected));
        total *= d;
        ++i;
    }
    std::vector<double> data(total);
    r.f64_array(data);
    return data;
}

std::span<const double> complex_as_doubles(const std::vector<cdouble>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 2};
}

}  // namespace

void save_params(const ModelParams& params, const FnoConfig& config, const std::string& path) {
    config.validate();
    ByteWriter w;
    w.u32(kMufnMagic);
    w.u32(kMufnVersion);
    w.u32(static_cast<std::uint32_t>(config.d));
    w.u32(static_cast<std::uint32_t>(config.L));
    w.u32(static_cast<std::uint32_t>(config.m));
    w.u32(static_cast<std::uint32_t>(config.K));
    w.u32(config.activation == Activation::gelu ? 0u : 1u);
    w.u32(static_cast<std::uint32_t>(config.in_channels));
    w.u32(static_cast<std::uint32_t>(config.out_channels));
    w.u32(config.coord_channel ? 1u : 0u);
    w.u32(config.real_r_mode ? 1u : 0u);

    const auto m = static_cast<std::uint64_t>(config.m);
    const auto K = static_cast<std::uint64_t>(config.K);
    write_tensor(w, params.P.w, {m, static_cast<std::uint64_t>(config.lifted_in_channels())});
    write_tensor(w, params.P.b, {m});
    write_tensor(w, params.Q1.w, {m, m});
    write_tensor(w, params.Q1.b, {m});
    write_tensor(w, params.Q2.w, {static_cast<std::uint64_t>(config.out_channels), m});
    write_tensor(w, params.Q2.b, {static_cast<std::uint64_t>(config.out_channels)});
    for (const auto& wl : params.W) {
        write_tensor(w, wl.w, {m, m});
        write_tensor(w, wl.b, {m});
    }
    for (const auto& sp : params.spectral) {
        write_tensor(w, complex_as_doubles(sp.r), {K, m, m, 2});
        const double a = sp.a_scale;
        write_tensor(w, std::span<const double>(&a, 1), {1});
    }
    w.write_file(path);
}

Checkpoint load_params(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    if (r.u32() != kMufnMagic) r.fail("bad magic, not a MUFN checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kMufnVersion) r.fail("unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.config.d = static_cast<int>(r.u32());
    ck.config.L = static_cast<int>(r.u32());
    ck.config.m = static_cast<int>(r.u32());
    ck.config.K = static_cast<int>(r.u32());
    ck.config.activation = r.u32() == 0 ? Activation::gelu : Activation::tanh;
    ck.config.in_channels = static_cast<int>(r.u32());
    ck.config.out_channels = static_cast<int>(r.u32());
    ck.config.coord_channel = r.u32() != 0;
    ck.config.real_r_mode = r.u32() != 0;
    ck.config.validate();

    const auto m = static_cast<std::uint64_t>(ck.config.m);
    const auto K = static_cast<std::uint64_t>(ck.config.K);
    auto& p = ck.params;
    p.P = Affine::zeros(ck.config.m, ck.config.lifted_in_channels());
    p.P.w = read_tensor(r, {m, static_cast<std::uint64_t>(ck.config.lifted_in_channels())});
    p.P.b = read_tensor(r, {m});
    p.Q1 = Affine::zeros(ck.config.m, ck.config.m);
    p.Q1.w = read_tensor(r, {m, m});
    p.Q1.b = read_tensor(r, {m});
    p.Q2 = Affine::zeros(ck.config.out_channels, ck.config.m);
    p.Q2.w = read_tensor(r, {static_cast<std::uint64_t>(ck.config.out_channels), m});
    p.Q2.b = read_tensor(r, {static_cast<std::uint64_t>(ck.config.out_channels)});
    p.W.resize(ck.config.L);
    for (auto& wl : p.W) {
        wl = Affine::zeros(ck.config.m, ck.config.m);
        wl.w = read_tensor(r, {m, m});
        wl.b = read_tensor(r, {m});
    }
    p.spectral.resize(ck.config.L);
    for (auto& sp : p.spectral) {
        sp = SpectralConvParams::zeros(ck.config.K, ck.config.m);
        sp.real_r_mode = ck.config.real_r_mode;
        const auto raw = read_tensor(r, {K, m, m, 2});
        for (std::size_t i = 0; i < sp.r.size(); ++i) sp.r[i] = cdouble(raw[2 * i], raw[2 * i + 1]);
        const auto a = read_tensor(r, {1});
        sp.a_scale = a[0];
    }
    if (r.remaining() != 0) r.fail("trailing bytes after checkpoint payload");
    return ck;
}

}  // namespace mufno
