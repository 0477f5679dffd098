// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace mufno {

Gradients Gradients::zeros_like(const ModelParams& p) {
    Gradients g;
    g.P = Affine::zeros(p.P.out, p.P.in);
    g.Q1 = Affine::zeros(p.Q1.out, p.Q1.in);
    g.Q2 = Affine::zeros(p.Q2.out, p.Q2.in);
    g.W.reserve(p.W.size());
    for (const auto& w : p.W) g.W.push_back(Affine::zeros(w.out, w.in));
    g.spectral.reserve(p.spectral.size());
    for (const auto& sp : p.spectral) {
        auto gs = SpectralConvParams::zeros(sp.K, sp.m);
        gs.real_r_mode = sp.real_r_mode;
        gs.a_scale = 0.0;
        g.spectral.push_back(std::move(gs));
    }
    return g;
}

namespace {

std::span<double> as_doubles(std::vector<cdouble>& v) { return {reinterpret_cast<double*>(v.data()), v.size() * 2}; }
std::span<const double> as_doubles(const std::vector<cdouble>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 2};
}

template <class Ref, class T>
std::vector<Ref> tensor_refs_impl(T& x) {
    std::vector<Ref> refs;
    auto add = [&](const std::string& name, auto& data) { refs.push_back({name, data, false, 0, 0, false}); };
    add("P.w", x.P.w);
    add("P.b", x.P.b);
    add("Q1.w", x.Q1.w);
    add("Q1.b", x.Q1.b);
    add("Q2.w", x.Q2.w);
    add("Q2.b", x.Q2.b);
    for (std::size_t l = 0; l < x.W.size(); ++l) {
        add("W[" + std::to_string(l) + "].w", x.W[l].w);
        add("W[" + std::to_string(l) + "].b", x.W[l].b);
    }
    for (std::size_t l = 0; l < x.spectral.size(); ++l) {
        auto& sp = x.spectral[l];
        refs.push_back({"spectral[" + std::to_string(l) + "].r", as_doubles(sp.r), true, sp.K, sp.m, sp.real_r_mode});
    }
    return refs;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& p) { return tensor_refs_impl<TensorRef>(p); }
std::vector<TensorRef> tensor_refs(Gradients& g) { return tensor_refs_impl<TensorRef>(g); }
std::vector<TensorView> tensor_views(const ModelParams& p) { return tensor_refs_impl<TensorView>(p); }
std::vector<TensorView> tensor_views(const Gradients& g) { return tensor_refs_impl<TensorView>(g); }

namespace {
template <class Refs>
std::string first_nonfinite_impl(const Refs& refs) {
    for (const auto& ref : refs)
        for (double v : ref.data)
            if (!std::isfinite(v)) return ref.name;
    return {};
}
}  // namespace

std::string first_nonfinite(const std::vector<TensorRef>& refs) { return first_nonfinite_impl(refs); }
std::string first_nonfinite(const std::vector<TensorView>& views) { return first_nonfinite_impl(views); }

double relative_l2_loss(const Tensor3& pred, const Tensor3& target) {
    if (!pred.same_shape(target)) throw SizeError("relative_l2_loss: shape mismatch");
    if (pred.b == 0) throw SizeError("relative_l2_loss: empty batch");
    const std::size_t per = pred.n * pred.c;
    double total = 0.0;
    for (std::size_t s = 0; s < pred.b; ++s) {
        const double* p = pred.v.data() + s * per;
        const double* t = target.v.data() + s * per;
        double rr = 0.0, tt = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            const double d = p[i] - t[i];
            rr += d * d;
            tt += t[i] * t[i];
        }
        if (tt == 0.0) throw NumericError("relative_l2_loss: zero-norm target at sample " + std::to_string(s));
        total += std::sqrt(rr) / std::sqrt(tt);
    }
    return total / static_cast<double>(pred.b);
}

namespace {

// dL/dy for y = affine(x): accumulates weight/bias grads and writes dL/dx.
void affine_backward(const Affine& a, const double* x, const double* gy, std::size_t npos, Affine& grad, double* gx) {
    for (std::size_t pos = 0; pos < npos; ++pos) {
        const double* xp = x + pos * a.in;
        const double* gp = gy + pos * a.out;
        double* gxp = gx ? gx + pos * a.in : nullptr;
        if (gxp)
            for (int i = 0; i < a.in; ++i) gxp[i] = 0.0;
        for (int o = 0; o < a.out; ++o) {
            const double g = gp[o];
            grad.b[o] += g;
            double* gw = grad.w.data() + static_cast<std::size_t>(o) * a.in;
            const double* wrow = a.w.data() + static_cast<std::size_t>(o) * a.in;
            for (int i = 0; i < a.in; ++i) {
                gw[i] += g * xp[i];
                if (gxp) gxp[i] += wrow[i] * g;
            }
        }
    }
}

struct SpectralBackwardWorkspace {
    std::vector<double> chan;
    std::vector<cdouble> spec;
    std::vector<cdouble> vhat;   // input spectrum, bins 0..K-1 per channel
    std::vector<cdouble> gout;   // cotangent spectrum of the output, scaled
    std::vector<cdouble> hspec;  // cotangent on the input spectrum
};

// Reverse pass of y = irfft(pad(R . trunc(rfft(v)))).
//
// With the unnormalized-forward / (1/n)-inverse convention the output-side
// adjoint carries weight 1/n at bin 0 and 2/n at interior bins; the
// input-side adjoint of rfft is n * irfft with interior bins halved. Gradients
// for r follow grad_r = a * Ghat * conj(vhat).
void spectral_conv_backward(const SpectralConvParams& sp, const Fft& plan, std::span<const double> v,
                            std::span<const double> gy, SpectralConvParams& grad_r, std::span<double> gv,
                            SpectralBackwardWorkspace& ws) {
    const std::size_t n = plan.n();
    const std::size_t bins = plan.bins();
    const int m = sp.m;
    const int K = sp.K;
    const std::size_t Km = static_cast<std::size_t>(K) * m;

    ws.chan.resize(n);
    ws.spec.resize(bins);
    ws.vhat.resize(Km);
    ws.gout.resize(Km);
    ws.hspec.assign(bins, cdouble(0.0, 0.0));

    for (int i = 0; i < m; ++i) {
        for (std::size_t pos = 0; pos < n; ++pos) ws.chan[pos] = v[pos * m + i];
        plan.forward(ws.chan, ws.spec);
        for (int k = 0; k < K; ++k) ws.vhat[static_cast<std::size_t>(k) * m + i] = ws.spec[k];
    }
    const double interior = 2.0 / static_cast<double>(n);
    for (int o = 0; o < m; ++o) {
        for (std::size_t pos = 0; pos < n; ++pos) ws.chan[pos] = gy[pos * m + o];
        plan.forward(ws.chan, ws.spec);
        for (int k = 0; k < K; ++k) {
            const double scale = (k == 0) ? 1.0 / static_cast<double>(n) : interior;
            ws.gout[static_cast<std::size_t>(k) * m + o] = scale * ws.spec[k];
        }
    }

    // Accumulate grad_r and the input-spectrum cotangent per bin.
    for (int k = 0; k < K; ++k) {
        const cdouble* vk = ws.vhat.data() + static_cast<std::size_t>(k) * m;
        const cdouble* gk = ws.gout.data() + static_cast<std::size_t>(k) * m;
        for (int o = 0; o < m; ++o) {
            const cdouble g = gk[o];
            cdouble* grow = grad_r.r.data() + (static_cast<std::size_t>(k) * m + o) * m;
            for (int i = 0; i < m; ++i) grow[i] += sp.a_scale * g * std::conj(vk[i]);
        }
    }
    // Constraint projection: forced-real slots keep zero imaginary gradient.
    for (int k = 0; k < K; ++k) {
        if (!(sp.real_r_mode || k == 0)) continue;
        for (int o = 0; o < m; ++o)
            for (int i = 0; i < m; ++i) {
                auto& g = grad_r.r[(static_cast<std::size_t>(k) * m + o) * m + i];
                g = cdouble(g.real(), 0.0);
            }
    }

    if (gv.empty()) return;
    for (int i = 0; i < m; ++i) {
        std::fill(ws.hspec.begin(), ws.hspec.end(), cdouble(0.0, 0.0));
        for (int k = 0; k < K; ++k) {
            cdouble acc(0.0, 0.0);
            const cdouble* gk = ws.gout.data() + static_cast<std::size_t>(k) * m;
            for (int o = 0; o < m; ++o) acc += std::conj(sp.rat(k, o, i)) * gk[o];
            acc *= sp.a_scale;
            // Adjoint of rfft: n * irfft with interior bins halved.
            ws.hspec[k] = (k == 0) ? acc : 0.5 * acc;
        }
        plan.inverse(ws.hspec, ws.chan);
        const double nf = static_cast<double>(n);
        for (std::size_t pos = 0; pos < n; ++pos) gv[pos * m + i] += nf * ws.chan[pos];
    }
}

}  // namespace

BackwardResult backward(const ModelParams& params, const FnoConfig& config, const Tensor3& inputs, const Tensor3& targets) {
    config.validate_for_grid(inputs.n);
    if (inputs.b != targets.b || inputs.n != targets.n) throw SizeError("backward: input/target batch shapes differ");
    if (targets.c != static_cast<std::size_t>(config.out_channels)) throw SizeError("backward: target channel mismatch");
    if (inputs.c != static_cast<std::size_t>(config.in_channels)) throw SizeError("backward: input channel mismatch");
    if (inputs.b == 0) throw SizeError("backward: empty batch");

    const std::size_t n = inputs.n;
    const int m = config.m;
    const std::size_t nm = n * static_cast<std::size_t>(m);
    const std::size_t nout = n * static_cast<std::size_t>(config.out_channels);
    const double inv_batch = 1.0 / static_cast<double>(inputs.b);

    Fft plan(n);
    SpectralWorkspace fws;
    SpectralBackwardWorkspace bws;
    SampleTrace trace;
    BackwardResult res;
    res.grads = Gradients::zeros_like(params);

    std::vector<double> g_out(nout), g_a(nm), g_b(nm), g_tmp(nm);

    for (std::size_t s = 0; s < inputs.b; ++s) {
        forward_sample(params, config, inputs.v.data() + s * inputs.n * inputs.c, n, plan, trace, fws);

        const double* tgt = targets.v.data() + s * nout;
        double rr = 0.0, tt = 0.0;
        for (std::size_t i = 0; i < nout; ++i) {
            const double d = trace.out[i] - tgt[i];
            rr += d * d;
            tt += tgt[i] * tgt[i];
        }
        if (tt == 0.0) throw NumericError("backward: zero-norm target at sample " + std::to_string(s));
        const double rnorm = std::sqrt(rr), tnorm = std::sqrt(tt);
        res.loss += inv_batch * rnorm / tnorm;

        // Subgradient 0 at an exact fit.
        const double gscale = rnorm > 0.0 ? inv_batch / (rnorm * tnorm) : 0.0;
        for (std::size_t i = 0; i < nout; ++i) g_out[i] = gscale * (trace.out[i] - tgt[i]);

        // Q2 -> activation -> Q1
        affine_backward(params.Q2, trace.q1_act.data(), g_out.data(), n, res.grads.Q2, g_a.data());
        for (std::size_t i = 0; i < nm; ++i) g_a[i] *= activate_prime(config.activation, trace.q1_pre[i]);
        affine_backward(params.Q1, trace.act[config.L - 1].data(), g_a.data(), n, res.grads.Q1, g_b.data());

        // Spectral blocks, last to first. g_b holds dL/dh_l on entry.
        for (int l = config.L - 1; l >= 0; --l) {
            for (std::size_t i = 0; i < nm; ++i) g_b[i] *= activate_prime(config.activation, trace.preact[l][i]);
            const double* h_in = l == 0 ? trace.h0.data() : trace.act[l - 1].data();
            affine_backward(params.W[l], h_in, g_b.data(), n, res.grads.W[l], g_a.data());
            std::fill(g_tmp.begin(), g_tmp.end(), 0.0);
            spectral_conv_backward(params.spectral[l], plan, std::span<const double>(h_in, nm),
                                   std::span<const double>(g_b.data(), nm), res.grads.spectral[l],
                                   std::span<double>(g_tmp.data(), nm), bws);
            for (std::size_t i = 0; i < nm; ++i) g_b[i] = g_a[i] + g_tmp[i];
        }

        affine_backward(params.P, trace.lifted.data(), g_b.data(), n, res.grads.P, nullptr);
    }

    const auto refs = tensor_refs(res.grads);
    const std::string bad = first_nonfinite(refs);
    if (!bad.empty()) throw NumericError("backward: non-finite gradient in " + bad);
    return res;
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

namespace {

// Indices into the flat double view that are true degrees of freedom
// (imaginary parts of forced-real spectral entries are excluded).
std::vector<std::size_t> active_slots(const TensorRef& ref) {
    std::vector<std::size_t> idx;
    if (!ref.spectral) {
        idx.resize(ref.data.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }
    const std::size_t mm = static_cast<std::size_t>(ref.m) * ref.m;
    for (std::size_t pair = 0; pair < ref.data.size() / 2; ++pair) {
        const std::size_t k = pair / mm;
        idx.push_back(2 * pair);
        if (!(ref.real_r_mode || k == 0)) idx.push_back(2 * pair + 1);
    }
    return idx;
}

}  // namespace

GradcheckReport gradcheck(const ModelParams& params, const FnoConfig& config, const Tensor3& inputs, const Tensor3& targets,
                          double tolerance, std::uint64_t seed) {
    constexpr double kStep = 1e-5;
    // Mixed criterion: the denominator floor keeps slots whose true gradient
    // sits at the central-difference noise floor (~|loss|*eps/h) from
    // dominating the report.
    constexpr double kDenomFloor = 1e-5;
    constexpr std::size_t kCheckAllLimit = 4096;
    constexpr std::size_t kSubsetSize = 1000;

    const BackwardResult base = backward(params, config, inputs, targets);

    ModelParams work = params;
    Gradients grads = base.grads;
    const auto prefs = tensor_refs(work);
    const auto grefs = tensor_refs(grads);

    struct Slot {
        std::size_t tensor, offset;
    };
    std::vector<Slot> slots;
    for (std::size_t t = 0; t < prefs.size(); ++t)
        for (std::size_t off : active_slots(prefs[t])) slots.push_back({t, off});

    if (slots.size() > kCheckAllLimit) {
        SeededRng rng(seed);
        std::vector<Slot> subset;
        subset.reserve(kSubsetSize);
        for (std::size_t i = 0; i < kSubsetSize; ++i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % slots.size());
            subset.push_back(slots[j]);
        }
        slots = std::move(subset);
    }

    GradcheckReport report;
    report.n_checked = slots.size();
    auto loss_at = [&]() { return relative_l2_loss(forward(work, config, inputs), targets); };
    for (const Slot& s : slots) {
        double& p = prefs[s.tensor].data[s.offset];
        const double saved = p;
        p = saved + kStep;
        const double lp = loss_at();
        p = saved - kStep;
        const double lm = loss_at();
        p = saved;
        const double fd = (lp - lm) / (2.0 * kStep);
        const double an = grefs[s.tensor].data[s.offset];
        const double rel = std::abs(fd - an) / (std::max(std::abs(fd), std::abs(an)) + kDenomFloor);
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_tensor = prefs[s.tensor].name;
        }
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace mufno
