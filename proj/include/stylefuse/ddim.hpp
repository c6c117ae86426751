// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stylefuse/denoiser.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse {

enum class BetaSpacing { linear, scaled_linear };

/// Beta / cumulative-alpha tables plus the sample-step to training-timestep map.
///
/// Indexing: sample steps run 0..T. Step 0 is the clean latent with
/// alpha_bar = 1; step s >= 1 evaluates the network at training timestep
/// timestep_map()[s - 1]. The map uses even "leading" spacing
/// (k * floor(T_train / T)), so T == T_train gives the identity map.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas, int sample_steps);

    int train_steps() const noexcept { return int(betas_.size()); }
    int sample_steps() const noexcept { return int(timestep_map_.size()); }

    const std::vector<double>& betas() const noexcept { return betas_; }
    /// Length T_train + 1; entry k is prod_{i<=k}(1 - beta_i) with entry 0 == 1.
    const std::vector<double>& alphas_cumprod() const noexcept { return alphas_cumprod_; }
    const std::vector<int>& timestep_map() const noexcept { return timestep_map_; }

    /// Cumulative alpha at sample step 0..T.
    double alpha_bar(int step) const;
    /// Network timestep for sample step 1..T.
    int train_timestep(int step) const;
    StepTime step_time(int step) const { return {step, train_timestep(step), alpha_bar(step)}; }

    /// Stable hex digest of the tables; recorded in dump manifests.
    std::string hash() const;

private:
    std::vector<double> betas_;
    std::vector<double> alphas_cumprod_;
    std::vector<int> timestep_map_;
};

NoiseSchedule make_schedule(int train_steps, double beta_start, double beta_end, int sample_steps,
                            BetaSpacing spacing = BetaSpacing::scaled_linear);

enum class Branch { content, style, target };

const char* to_string(Branch b);
Branch branch_from_string(const std::string& s);

struct Latent {
    Tensor data;
    int step = 0;
    Branch branch = Branch::target;
};

/// Throws Error when the latent holds NaN or Inf.
void require_finite(const Latent& z, const std::string& what);

/// Latents of one branch indexed by sample step.
class LatentTrajectory {
public:
    explicit LatentTrajectory(Branch branch = Branch::content) : branch_(branch) {}

    Branch branch() const noexcept { return branch_; }
    std::size_t size() const noexcept { return latents_.size(); }
    bool empty() const noexcept { return latents_.empty(); }
    bool contains(int step) const { return latents_.count(step) != 0; }

    /// Throws Error("missing trajectory entry") for absent steps.
    const Latent& at(int step) const;
    void insert(Latent z);

    std::vector<int> steps() const;
    /// Entries with lo <= step <= hi.
    LatentTrajectory slice(int lo, int hi) const;

    const std::map<int, Latent>& entries() const noexcept { return latents_; }

private:
    Branch branch_;
    std::map<int, Latent> latents_;
};

/// sqrt(a_t) * z0 + sqrt(1 - a_t) * eps.
Latent add_noise(const Latent& z0, const Tensor& eps, int step, const NoiseSchedule& s);

/// Deterministic (eta = 0) DDIM update from `step` down to `prev_step`.
Latent ddim_step(const Latent& z, const Tensor& eps, int step, int prev_step, const NoiseSchedule& s);

/// DDIM inversion update from `step` up to `next_step`.
Latent ddim_invert_step(const Latent& z, const Tensor& eps, int step, int next_step, const NoiseSchedule& s);

/// eps_uncond + scale * (eps_cond - eps_uncond).
Tensor cfg_combine(const Tensor& eps_uncond, const Tensor& eps_cond, float scale);

/// Inverts z0 (step 0) up to step `hi`, keeping z*_t for lo <= t <= hi.
///
/// The update from t-1 to t evaluates the backend on the current latent
/// z*_{t-1} at the network timestep of t. Reaching step `hi` takes `hi`
/// backend evaluations regardless of `lo`; an empty range (lo > hi) costs
/// nothing.
LatentTrajectory invert_trajectory(const Latent& z0, int lo, int hi, const Denoiser& backend, const Tensor& cond,
                                   const NoiseSchedule& s);

/// Continues an existing trajectory (which must hold its highest step's
/// latent) up to `hi`. Used to share inversions across alpha sweeps.
void extend_trajectory(LatentTrajectory& traj, int hi, const Denoiser& backend, const Tensor& cond,
                       const NoiseSchedule& s);

void dump_trajectory(const std::filesystem::path& dir, const LatentTrajectory& traj, const NoiseSchedule& s);
LatentTrajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace stylefuse
