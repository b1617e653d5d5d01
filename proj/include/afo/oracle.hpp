#ifndef AFO_ORACLE_HPP
#define AFO_ORACLE_HPP

#include "afo/core.hpp"
#include "afo/objective.hpp"

#include <stdexcept>
#include <string>

namespace afo {

/// Reference minimizer of h(x) = f(x) + g(Cx) over the box.
struct MinimizerSolution {
    VectorXd x_star;
    VectorXd y_star;     // C·x_star
    double residual = 0.0;  // ‖x − Π[x − ∇h(x)]‖ at exit
    long iterations = 0;
};

struct OracleOptions {
    double tolerance = 1e-10;
    long max_iterations = 1'000'000;
    long newton_interval = 10;  // 0 disables the free-coordinate Newton step
};

class OracleError : public std::runtime_error {
public:
    OracleError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Projected gradient descent with step 1/λ_max(Q + CᵀPC); stops once the
/// gradient mapping satisfies ‖x − Π[x − ∇h]‖ ≤ tol·(1 + ‖∇h‖). Every
/// `newton_interval` iterations a Newton step on the free coordinates is
/// tried and kept only if it lowers h. Throws OracleError when the iteration
/// cap is hit.
MinimizerSolution solve_minimizer(const QuadraticEpoch& epoch, const OutputMap& map, const BoxSet& set,
                                  const VectorXd* warm_start = nullptr, const OracleOptions& options = {});

/// Oracle error allowance for α comparisons at this epoch's scale.
double oracle_slack(const QuadraticEpoch& epoch, const MinimizerSolution& solution);

}  // namespace afo

#endif  // AFO_ORACLE_HPP
