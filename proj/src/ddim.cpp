// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/ddim.hpp"

#include <cmath>
#include <sstream>

#include "stylefuse/error.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

NoiseSchedule::NoiseSchedule(std::vector<double> betas, int sample_steps) : betas_(std::move(betas)) {
    const int train = int(betas_.size());
    if (train < 1) throw ConfigError("schedule needs at least one training timestep");
    if (sample_steps < 1 || sample_steps > train) {
        throw ConfigError("sample steps " + std::to_string(sample_steps) + " outside [1, " + std::to_string(train) +
                          "]");
    }
    alphas_cumprod_.resize(betas_.size() + 1);
    alphas_cumprod_[0] = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        if (!(betas_[i] > 0.0 && betas_[i] < 1.0)) throw ConfigError("beta outside (0, 1)");
        alphas_cumprod_[i + 1] = alphas_cumprod_[i] * (1.0 - betas_[i]);
    }
    const int ratio = train / sample_steps;
    timestep_map_.resize(std::size_t(sample_steps));
    for (int k = 0; k < sample_steps; ++k) timestep_map_[std::size_t(k)] = k * ratio;
}

double NoiseSchedule::alpha_bar(int step) const {
    if (step < 0 || step > sample_steps()) {
        throw ConfigError("sample step " + std::to_string(step) + " outside [0, " + std::to_string(sample_steps()) +
                          "]");
    }
    return step == 0 ? 1.0 : alphas_cumprod_[std::size_t(timestep_map_[std::size_t(step - 1)]) + 1];
}

int NoiseSchedule::train_timestep(int step) const {
    if (step < 1 || step > sample_steps()) {
        throw ConfigError("sample step " + std::to_string(step) + " has no network timestep");
    }
    return timestep_map_[std::size_t(step - 1)];
}

std::string NoiseSchedule::hash() const {
    std::ostringstream os;
    os.precision(17);
    for (double b : betas_) os << b << ',';
    os << '|';
    for (int t : timestep_map_) os << t << ',';
    return hex64(fnv1a(os.str()));
}

NoiseSchedule make_schedule(int train_steps, double beta_start, double beta_end, int sample_steps,
                            BetaSpacing spacing) {
    if (train_steps < 1) throw ConfigError("train_steps must be positive");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ConfigError("need 0 < beta_start <= beta_end < 1");
    }
    if (sample_steps < 1 || sample_steps > train_steps) {
        throw ConfigError("need 1 <= sample_steps <= train_steps");
    }
    std::vector<double> betas(static_cast<std::size_t>(train_steps));
    for (int i = 0; i < train_steps; ++i) {
        const double f = train_steps == 1 ? 0.0 : double(i) / double(train_steps - 1);
        if (spacing == BetaSpacing::linear) {
            betas[std::size_t(i)] = beta_start + f * (beta_end - beta_start);
        } else {
            const double r = std::sqrt(beta_start) + f * (std::sqrt(beta_end) - std::sqrt(beta_start));
            betas[std::size_t(i)] = r * r;
        }
    }
    return NoiseSchedule(std::move(betas), sample_steps);
}

const char* to_string(Branch b) {
    switch (b) {
        case Branch::content: return "content";
        case Branch::style: return "style";
        case Branch::target: return "target";
    }
    return "?";
}

Branch branch_from_string(const std::string& s) {
    if (s == "content") return Branch::content;
    if (s == "style") return Branch::style;
    if (s == "target") return Branch::target;
    throw ConfigError("unknown branch '" + s + "'");
}

void require_finite(const Latent& z, const std::string& what) {
    if (!z.data.all_finite()) {
        throw Error(what + ": non-finite latent at step " + std::to_string(z.step) + " (" + to_string(z.branch) + ")");
    }
}

const Latent& LatentTrajectory::at(int step) const {
    auto it = latents_.find(step);
    if (it == latents_.end()) {
        throw Error(std::string("missing trajectory entry for step ") + std::to_string(step) + " in " +
                    to_string(branch_) + " branch");
    }
    return it->second;
}

void LatentTrajectory::insert(Latent z) {
    if (z.branch != branch_) {
        throw Error(std::string("latent tagged ") + to_string(z.branch) + " inserted into " + to_string(branch_) +
                    " trajectory");
    }
    const int step = z.step;
    latents_.insert_or_assign(step, std::move(z));
}

std::vector<int> LatentTrajectory::steps() const {
    std::vector<int> out;
    out.reserve(latents_.size());
    for (const auto& [t, _] : latents_) out.push_back(t);
    return out;
}

LatentTrajectory LatentTrajectory::slice(int lo, int hi) const {
    LatentTrajectory out(branch_);
    for (auto it = latents_.lower_bound(lo); it != latents_.end() && it->first <= hi; ++it) out.insert(it->second);
    return out;
}

Latent add_noise(const Latent& z0, const Tensor& eps, int step, const NoiseSchedule& s) {
    require_same_shape(z0.data, eps, "add_noise");
    const double a = s.alpha_bar(step);
    const double ca = std::sqrt(a), cn = std::sqrt(1.0 - a);
    Latent out{Tensor(z0.data.shape()), step, z0.branch};
    for (std::size_t i = 0; i < eps.size(); ++i) out.data[i] = float(ca * z0.data[i] + cn * eps[i]);
    return out;
}

Latent ddim_step(const Latent& z, const Tensor& eps, int step, int prev_step, const NoiseSchedule& s) {
    if (prev_step >= step) {
        throw OrderingError("ddim_step needs prev_step < step (got " + std::to_string(prev_step) + " >= " +
                            std::to_string(step) + ")");
    }
    require_same_shape(z.data, eps, "ddim_step");
    const double a_t = s.alpha_bar(step);
    const double a_prev = s.alpha_bar(prev_step);
    const double inv_sqrt_a = 1.0 / std::sqrt(a_t);
    const double sqrt_1ma = std::sqrt(1.0 - a_t);
    const double sqrt_a_prev = std::sqrt(a_prev);
    const double sqrt_1ma_prev = std::sqrt(1.0 - a_prev);

    Latent out{Tensor(z.data.shape()), prev_step, z.branch};
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double x0 = (double(z.data[i]) - sqrt_1ma * eps[i]) * inv_sqrt_a;
        out.data[i] = float(sqrt_a_prev * x0 + sqrt_1ma_prev * eps[i]);
    }
    return out;
}

Latent ddim_invert_step(const Latent& z, const Tensor& eps, int step, int next_step, const NoiseSchedule& s) {
    if (next_step <= step) {
        throw OrderingError("ddim_invert_step needs next_step > step (got " + std::to_string(next_step) +
                            " <= " + std::to_string(step) + ")");
    }
    require_same_shape(z.data, eps, "ddim_invert_step");
    const double a_t = s.alpha_bar(step);
    const double a_next = s.alpha_bar(next_step);
    const double scale = std::sqrt(a_next / a_t);
    const double coef = std::sqrt(1.0 - a_next) - std::sqrt(a_next) * std::sqrt(1.0 / a_t - 1.0);

    Latent out{Tensor(z.data.shape()), next_step, z.branch};
    for (std::size_t i = 0; i < eps.size(); ++i) out.data[i] = float(scale * z.data[i] + coef * eps[i]);
    return out;
}

Tensor cfg_combine(const Tensor& eps_uncond, const Tensor& eps_cond, float scale) {
    require_same_shape(eps_uncond, eps_cond, "cfg_combine");
    Tensor out(eps_cond.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_uncond[i] + scale * (eps_cond[i] - eps_uncond[i]);
    return out;
}

void extend_trajectory(LatentTrajectory& traj, int hi, const Denoiser& backend, const Tensor& cond,
                       const NoiseSchedule& s) {
    if (traj.empty()) throw Error("cannot extend an empty trajectory");
    Latent current = traj.entries().rbegin()->second;
    for (int t = current.step + 1; t <= hi; ++t) {
        const auto pred = backend.predict_noise(current.data, s.step_time(t), cond);
        current = ddim_invert_step(current, pred.eps, t - 1, t, s);
        require_finite(current, "inversion");
        traj.insert(current);
    }
}

LatentTrajectory invert_trajectory(const Latent& z0, int lo, int hi, const Denoiser& backend, const Tensor& cond,
                                   const NoiseSchedule& s) {
    LatentTrajectory traj(z0.branch);
    if (lo > hi) return traj;
    if (lo < 0 || hi > s.sample_steps()) {
        throw ConfigError("inversion range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] outside sample range");
    }
    Latent current = z0;
    current.step = 0;
    if (lo == 0) traj.insert(current);
    for (int t = 1; t <= hi; ++t) {
        const auto pred = backend.predict_noise(current.data, s.step_time(t), cond);
        current = ddim_invert_step(current, pred.eps, t - 1, t, s);
        require_finite(current, "inversion");
        if (t >= lo) traj.insert(current);
    }
    return traj;
}

void dump_trajectory(const std::filesystem::path& dir, const LatentTrajectory& traj, const NoiseSchedule& s) {
    TensorDir out;
    out.meta = {{"kind", "trajectory"},
                {"branch", to_string(traj.branch())},
                {"timesteps", traj.steps()},
                {"schedule_hash", s.hash()}};
    for (const auto& [t, z] : traj.entries()) out.tensors.emplace("z_" + std::to_string(t), z.data);
    write_tensor_dir(dir, out);
}

LatentTrajectory load_trajectory(const std::filesystem::path& dir) {
    const auto in = read_tensor_dir(dir);
    if (in.meta.value("kind", "") != "trajectory") throw IoError(dir.string() + " is not a trajectory dump");
    LatentTrajectory traj(branch_from_string(in.meta.at("branch").get<std::string>()));
    for (int t : in.meta.at("timesteps").get<std::vector<int>>()) {
        auto it = in.tensors.find("z_" + std::to_string(t));
        if (it == in.tensors.end()) throw IoError("trajectory dump lacks step " + std::to_string(t));
        traj.insert(Latent{it->second, t, traj.branch()});
    }
    return traj;
}

}  // namespace stylefuse
