#pragma once

#include "dabd/partition.hpp"

#include <vector>

namespace dabd {

// Normalized timing imbalance T = (eta - 1)/(eta + 1) with eta = tau_i/tau_j.
// Zero means perfect balance; the sign says which worker is slower.
double imbalance_metric(double tau_i, double tau_j);

// PD update on the imbalance signal, clamped to +-dp_max.
double pd_update(double t, double t_prev, double kp, double kd, double dp_max);

// p' = p + dp * n; takes effect at the next frame's partitioning.
Plane shift_boundary(const Plane& plane, double dp);

// mean/max of per-worker compute times; 1 is perfect balance (diagnostic).
double balance_factor(const std::vector<double>& times);

// Discrete-time PD boundary controller, applied pairwise per interface from
// smoothed per-worker compute times.
class Balancer {
  public:
    struct Options {
        double kp = 0.0;
        double kd = 0.0;
        double smoothing = 0.5; // EMA factor on raw compute times
        double dp_max = 0.0;    // per-frame shift clamp (w/2 by default)
    };

    Balancer(int num_workers, Options options)
        : options_(options), smoothed_(num_workers, 0.0),
          t_prev_(std::max(0, num_workers - 1), 0.0) {}

    // Feeds one frame of per-worker compute times and shifts the planes in
    // place. Returns the applied per-interface shifts. `w` bounds the shift
    // (dp_max <= w/2) and keeps shifted planes from crossing their
    // neighbors (clamped to the midpoint minus w).
    std::vector<double> update(const std::vector<double>& compute_times,
                               std::vector<Plane>& planes, double w);

    const std::vector<double>& smoothed_times() const { return smoothed_; }

  private:
    Options options_;
    std::vector<double> smoothed_;
    std::vector<double> t_prev_;
    bool primed_ = false;
};

} // namespace dabd
