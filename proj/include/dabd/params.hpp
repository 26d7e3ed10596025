#pragma once

#include "dabd/types.hpp"

namespace dabd {

// Time-stepping and energy parameters shared by all solvers.
struct SimParams {
    double h = 0.01;                 // time step (s)
    Vec2 gravity{0.0, -9.81};        // m/s^2
    double arap_stiffness = 1e6;     // orthogonality penalty on the linear part
    double barrier_stiffness = 1e4;  // contact barrier scale
    double d_hat = 0.01;             // barrier activation distance (m)
    double theta = 1e-3;             // convergence threshold
    double scene_scale = 1.0;        // l, meters

    void validate() const {
        if (h <= 0.0) throw Error("SimParams: h must be > 0");
        if (d_hat <= 0.0) throw Error("SimParams: d_hat must be > 0");
        if (theta <= 0.0) throw Error("SimParams: theta must be > 0");
        if (scene_scale <= 0.0) throw Error("SimParams: scene_scale must be > 0");
    }
};

// Penalty initialization / residual-driven adaptation constants.
struct AdaptParams {
    double beta = 1.0;       // rho0 = beta * m_b
    double tau = 2.0;        // multiplicative update factor
    double mu = 5.0;         // residual imbalance threshold
    double sigma_min = 1e-3; // clamp lower bound, relative to rho0
    double sigma_max = 1e3;  // clamp upper bound, relative to rho0
    bool adapt_enabled = true;

    void validate() const {
        if (beta <= 0.0) throw Error("AdaptParams: beta must be > 0");
        if (tau <= 1.0) throw Error("AdaptParams: tau must be > 1");
        if (mu <= 1.0) throw Error("AdaptParams: mu must be > 1");
        if (!(sigma_min > 0.0 && sigma_min < 1.0 && sigma_max > 1.0))
            throw Error("AdaptParams: need 0 < sigma_min < 1 < sigma_max");
    }
};

} // namespace dabd
