#pragma once

#include "dabd/objective.hpp"

namespace dabd {

struct NewtonReport {
    int iterations = 0;
    double final_update_inf = 0.0; // ||alpha * dq||_inf of the last step
    bool converged = false;
    int line_search_steps = 0; // total backtracks
};

struct NewtonOptions {
    int max_iters = 32;
    double tol = 1e-6;     // stop when ||alpha dq||_inf < tol
    double armijo_c = 0.0; // sufficient-decrease constant (0 = pure decrease)
};

// Projected Newton with CCD-filtered backtracking line search. Every iterate
// stays penetration-free: the step size is capped by the scene TOI before
// backtracking begins. `q` is updated in place over the objective's local
// bodies. Throws when the line search collapses below 1e-12 without a
// decrease (non-descent direction).
NewtonReport newton_solve(const LocalObjective& objective, Configs& q,
                          const NewtonOptions& options);

} // namespace dabd
