#include "dabd/newton.hpp"

#include <Eigen/SparseCholesky>

namespace dabd {

NewtonReport newton_solve(const LocalObjective& objective, Configs& q,
                          const NewtonOptions& options) {
    NewtonReport report;
    if (objective.num_dofs() == 0) {
        report.converged = true;
        return report;
    }

    double energy = objective.value(q);
    for (int iter = 0; iter < options.max_iters; ++iter) {
        auto derivs = objective.derivatives(q);
        ++report.iterations;

        // (H + eps I) dq = -g with a trace-scaled regularizer.
        const double eps =
            1e-8 * derivs.hess.diagonal().sum() / objective.num_dofs();
        Eigen::SparseMatrix<double> sys = derivs.hess;
        for (int i = 0; i < sys.rows(); ++i) sys.coeffRef(i, i) += eps;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys);
        if (solver.info() != Eigen::Success)
            throw Error("newton_solve: factorization failed");
        const VecX dq = solver.solve(-derivs.grad);

        const double dq_inf = dq.cwiseAbs().maxCoeff();
        if (dq_inf < options.tol) {
            // Already at a stationary point at this resolution; do not move.
            report.final_update_inf = dq_inf;
            report.converged = true;
            break;
        }

        // CCD upper bound for the full step keeps all iterates feasible.
        Configs q_end = q;
        objective.apply_step(q_end, dq, 1.0);
        const double alpha_max =
            ccd_toi_scene(objective.bodies(), q, q_end, objective.local_bodies());

        double alpha = alpha_max;
        const double slope = derivs.grad.dot(dq); // < 0 along a descent direction
        bool accepted = false;
        while (alpha >= 1e-12) {
            Configs q_try = q;
            objective.apply_step(q_try, dq, alpha);
            const double trial = objective.value(q_try);
            if (trial < energy + options.armijo_c * alpha * slope) {
                q = std::move(q_try);
                energy = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
            ++report.line_search_steps;
        }
        if (!accepted)
            throw Error("newton_solve: line search failed below 1e-12 "
                        "(non-descent direction)");

        report.final_update_inf = alpha * dq_inf;
        if (report.final_update_inf < options.tol) {
            report.converged = true;
            break;
        }
    }
    return report;
}

} // namespace dabd
