#ifndef AFO_OBJECTIVE_HPP
#define AFO_OBJECTIVE_HPP

#include "afo/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace afo {

/// One epoch of the time-varying objective
///   J(x, y; t) = ½xᵀQx + qᵀx + ½(y − θ)ᵀP(y − θ) + offset.
struct QuadraticEpoch {
    double t = 0.0;
    MatrixXd Q;
    VectorXd q;
    MatrixXd P;
    VectorXd theta;
    double constant_offset = 0.0;

    /// Builds the target form from a linear output cost ½yᵀPy + pᵀy:
    /// θ = −P⁻¹p and the offset absorbs −½θᵀPθ so that J is unchanged.
    static QuadraticEpoch from_linear_output(double t, MatrixXd Q, VectorXd q, MatrixXd P,
                                             const VectorXd& p);

    /// Checks shapes, symmetry and positive definiteness of Q and P.
    /// Throws std::invalid_argument naming the offending matrix.
    void validate(const BlockLayout& layout) const;

    int n() const { return static_cast<int>(q.size()); }
    int m() const { return static_cast<int>(theta.size()); }
};

double eval_f(const QuadraticEpoch& epoch, const VectorXd& x);
double eval_g(const QuadraticEpoch& epoch, const VectorXd& y);
double eval_J(const QuadraticEpoch& epoch, const VectorXd& x, const VectorXd& y);

VectorXd grad_f(const QuadraticEpoch& epoch, const VectorXd& x);
VectorXd grad_g(const QuadraticEpoch& epoch, const VectorXd& y);

/// ∇ₓ of h(x) = f(x) + g(Cx): ∇f(x) + Cᵀ∇g(Cx).
VectorXd grad_composite(const QuadraticEpoch& epoch, const OutputMap& map, const VectorXd& x);

/// Agent i's block of ∇f(x_local) + C_iᵀ∇g(y_local).
VectorXd grad_block(const QuadraticEpoch& epoch, const OutputMap& map, const BlockLayout& layout,
                    int i, const VectorXd& x_local, const VectorXd& y_local);

/// What an epoch generator may see at an epoch boundary: the network state
/// before the first tick of the new epoch. Read-only.
struct BoundaryView {
    std::size_t epoch = 0;
    long tick = 0;
    const BlockLayout* layout = nullptr;
    VectorXd x_true;
    std::span<const VectorXd> agent_inputs;   // x^i, one per agent
    std::span<const VectorXd> agent_outputs;  // y^i, one per agent
};

using EpochGenerator = std::function<QuadraticEpoch(const BoundaryView&)>;
using EpochSource = std::variant<QuadraticEpoch, EpochGenerator>;

/// Ordered epochs with κ_ℓ = r_ℓ·B ticks each.
class EpochSchedule {
public:
    EpochSchedule() = default;
    EpochSchedule(std::vector<EpochSource> sources, std::vector<long> ticks_per_epoch, int B);

    /// Same κ for every epoch.
    static EpochSchedule uniform(std::vector<EpochSource> sources, long ticks_per_epoch, int B);

    std::size_t count() const { return sources_.size(); }
    const EpochSource& source(std::size_t ell) const { return sources_.at(ell); }
    long kappa(std::size_t ell) const { return kappa_.at(ell); }
    long r(std::size_t ell) const { return kappa_.at(ell) / B_; }
    int B() const { return B_; }

    /// η_ℓ = Σ_{i≤ℓ} κ_i; η_{−1} = 0 is `eta_before(0)`.
    long eta(std::size_t ell) const { return eta_.at(ell); }
    long eta_before(std::size_t ell) const { return ell == 0 ? 0 : eta_.at(ell - 1); }
    long horizon() const { return eta_.empty() ? 0 : eta_.back(); }

    /// Epoch whose objective is minimized during tick k: η_{ℓ−1} ≤ k < η_ℓ.
    std::size_t epoch_of_tick(long k) const;
    /// Epoch a state index is measured against: k ∈ (η_{ℓ−1}, η_ℓ], state 0 → 0.
    std::size_t epoch_of_state(long k) const;

private:
    std::vector<EpochSource> sources_;
    std::vector<long> kappa_;
    std::vector<long> eta_;
    int B_ = 1;
};

/// Per-epoch problem constants consumed by the bound ladder.
struct EpochConstants {
    double L_x = 0.0;
    double L_y = 0.0;
    double L = 0.0;
    double L_J = 0.0;
    double M_x = 0.0;
    double M_y = 0.0;
    double p_strong = 0.0;
    double sigma = 0.0;
    double L_t = 0.0;
    double Delta = 0.0;
    double lambda_eb = 0.0;
};

struct ConstantsOptions {
    std::optional<double> lambda_eb;  // empirical estimate when empty
    int lt_samples = 1000;
    int eb_samples = 10000;
    double eb_safety = 2.0;
    std::uint64_t seed = 0;
};

/// Lipschitz, gradient-bound and drift constants for one epoch. `prev` and
/// `prev_x_star` are null for the first epoch.
EpochConstants epoch_constants(const QuadraticEpoch& epoch, const VectorXd& x_star,
                               const QuadraticEpoch* prev, const VectorXd* prev_x_star,
                               const BoxSet& set, const OutputMap& map, const BlockLayout& layout,
                               const ConstantsOptions& options = {});

/// Componentwise sup |A·v + b| over v in the box, by interval arithmetic.
VectorXd affine_abs_bound(const MatrixXd& A, const VectorXd& b, const VectorXd& lower,
                          const VectorXd& upper);

/// Empirical error-bound constant: safety × max ‖x − x*‖ / ‖x − Π[x − ∇h(x)]‖
/// over seeded samples in the box.
double estimate_error_bound(const QuadraticEpoch& epoch, const VectorXd& x_star, const BoxSet& set,
                            const OutputMap& map, int samples, double safety, std::uint64_t seed);

}  // namespace afo

#endif  // AFO_OBJECTIVE_HPP
