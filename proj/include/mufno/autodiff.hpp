// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mufno/model.hpp"

namespace mufno {

/// Parameter-shaped gradient carrier. Complex spectral gradients follow the
/// convention grad = dL/d(re) + i * dL/d(im), so the optimizer can treat each
/// scalar component independently. a_scale/real_r_mode fields are inert here.
struct Gradients {
    Affine P, Q1, Q2;
    std::vector<Affine> W;
    std::vector<SpectralConvParams> spectral;

    static Gradients zeros_like(const ModelParams& p);
};

/// Flat double-view of one tensor (complex storage viewed as interleaved
/// re/im). Used by the optimizer, clipping and finiteness checks.
struct TensorRef {
    std::string name;
    std::span<double> data;
    bool spectral = false;
    int K = 0, m = 0;            // set for spectral tensors
    bool real_r_mode = false;    // set for spectral tensors
};

/// Read-only counterpart of TensorRef.
struct TensorView {
    std::string name;
    std::span<const double> data;
    bool spectral = false;
    int K = 0, m = 0;
    bool real_r_mode = false;
};

std::vector<TensorRef> tensor_refs(ModelParams& p);
std::vector<TensorRef> tensor_refs(Gradients& g);
std::vector<TensorView> tensor_views(const ModelParams& p);
std::vector<TensorView> tensor_views(const Gradients& g);

/// Returns the name of the first tensor containing a non-finite value, or
/// empty string if everything is finite.
std::string first_nonfinite(const std::vector<TensorRef>& refs);
std::string first_nonfinite(const std::vector<TensorView>& views);

/// Mean over the batch of |pred - target|_2 / |target|_2 (norms over all
/// n*c entries of a sample). Throws on zero-norm targets.
double relative_l2_loss(const Tensor3& pred, const Tensor3& target);

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

/// Loss and exact gradients of relative_l2_loss(forward(params, input), target).
BackwardResult backward(const ModelParams& params, const FnoConfig& config, const Tensor3& inputs, const Tensor3& targets);

struct GradcheckReport {
    double max_rel_err = 0.0;
    std::string worst_tensor;
    bool pass = false;
    std::size_t n_checked = 0;
};

/// Central-difference verification of backward. Checks every active scalar
/// when the model is small, otherwise a seeded random subset (>= 500).
GradcheckReport gradcheck(const ModelParams& params, const FnoConfig& config, const Tensor3& inputs, const Tensor3& targets,
                          double tolerance, std::uint64_t seed = 0);

}  // namespace mufno
