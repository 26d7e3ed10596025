#include "dabd/balance.hpp"

#include <algorithm>
#include <cmath>

namespace dabd {

double imbalance_metric(double tau_i, double tau_j) {
    if (!(tau_i > 0.0) || !(tau_j > 0.0))
        throw Error("imbalance_metric: compute times must be > 0");
    const double eta = tau_i / tau_j;
    return (eta - 1.0) / (eta + 1.0);
}

double pd_update(double t, double t_prev, double kp, double kd, double dp_max) {
    const double dp = kp * t + kd * (t - t_prev);
    if (dp_max > 0.0) return std::clamp(dp, -dp_max, dp_max);
    return dp;
}

Plane shift_boundary(const Plane& plane, double dp) {
    Plane out = plane;
    out.point += dp * plane.normal;
    return out;
}

double balance_factor(const std::vector<double>& times) {
    if (times.empty()) return 1.0;
    double sum = 0.0, peak = 0.0;
    for (double t : times) {
        if (!(t > 0.0)) throw Error("balance_factor: compute times must be > 0");
        sum += t;
        peak = std::max(peak, t);
    }
    return sum / times.size() / peak;
}

std::vector<double> Balancer::update(const std::vector<double>& compute_times,
                                     std::vector<Plane>& planes, double w) {
    if (compute_times.size() != smoothed_.size())
        throw Error("Balancer: worker count mismatch");
    if (planes.size() != t_prev_.size())
        throw Error("Balancer: interface count mismatch");

    for (size_t i = 0; i < smoothed_.size(); ++i) {
        smoothed_[i] = primed_ ? options_.smoothing * compute_times[i] +
                                     (1.0 - options_.smoothing) * smoothed_[i]
                               : compute_times[i];
    }
    primed_ = true;

    const double dp_max = options_.dp_max > 0.0 ? options_.dp_max : w / 2.0;
    std::vector<double> applied(planes.size(), 0.0);
    for (size_t k = 0; k < planes.size(); ++k) {
        const double t = imbalance_metric(smoothed_[k], smoothed_[k + 1]);
        double dp = pd_update(t, t_prev_[k], options_.kp, options_.kd, dp_max);
        t_prev_[k] = t;

        // Keep at least w of clearance to the neighboring planes.
        if (k > 0) {
            const double s = (planes[k - 1].point - planes[k].point).dot(planes[k].normal);
            if (s < 0.0) dp = std::max(dp, s + w);
            if (s > 0.0) dp = std::min(dp, s - w);
        }
        if (k + 1 < planes.size()) {
            const double s = (planes[k + 1].point - planes[k].point).dot(planes[k].normal);
            if (s < 0.0) dp = std::max(dp, s + w);
            if (s > 0.0) dp = std::min(dp, s - w);
        }

        planes[k] = shift_boundary(planes[k], dp);
        applied[k] = dp;
    }
    return applied;
}

} // namespace dabd
