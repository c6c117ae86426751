// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stylefuse {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter values (schedule ranges, alpha, layer sets, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Timestep arguments in the wrong order for the requested update.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// A directive that cannot be applied to the layer it targets.
class InjectionError : public Error {
public:
    using Error::Error;
};

/// A requested adapter (real encoder, VAE, LPIPS, ...) is not available.
class CapabilityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Pipeline failure wrapped with the stage and step it happened at.
class StageError : public Error {
public:
    StageError(std::string stage, int step, const std::string& what)
        : Error(format(stage, step, what)), stage_(std::move(stage)), step_(step) {}

    const std::string& stage() const noexcept { return stage_; }
    int step() const noexcept { return step_; }

private:
    static std::string format(const std::string& stage, int step, const std::string& what) {
        std::string msg = "[" + stage;
        if (step >= 0) msg += " @ step " + std::to_string(step);
        return msg + "] " + what;
    }

    std::string stage_;
    int step_;
};

}  // namespace stylefuse
