#ifndef AFO_THEORY_HPP
#define AFO_THEORY_HPP

#include "afo/engine.hpp"
#include "afo/metrics.hpp"
#include "afo/objective.hpp"

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace afo {

/// Problem-wide quantities every constant depends on.
struct TheoryParams {
    int B = 1;
    int N = 1;
    int m = 1;
    double norm_c = 0.0;
    double diam = 0.0;

    static TheoryParams from(const Problem& problem, int B);
};

struct Term {
    std::string label;
    double value = 0.0;
};

double sum_terms(const std::vector<Term>& terms);

struct ConstantsDE {
    double D = 0.0;
    double E = 0.0;
};

ConstantsDE constants_DE(const EpochConstants& ec, double gamma, int B, int N, double norm_c);

/// Addends of F before the overall factor ½. Terms in
/// the (1+λ²) bracket already carry that factor.
std::vector<Term> f_terms(const EpochConstants& ec, int B, int N, int m, double norm_c, double lambda);
/// Addends of G before the overall factor N/2.
std::vector<Term> g_terms(const EpochConstants& ec, int B, int N, int m, double norm_c, double lambda);

struct ConstantsFG {
    double F = 0.0;
    double G = 0.0;
};

ConstantsFG constants_FG(const EpochConstants& ec, int B, int N, int m, double norm_c, double lambda);

/// K = 8E(G/F + E/D)F, the factor shared by a₀, a_ℓ, V_ℓ and two γ_max terms.
double coupling_factor(double D, double E, double F, double G);

struct GammaMax {
    static constexpr int kTerms = 8;
    std::array<double, kTerms> terms{};
    double value = 0.0;
    int binding = 0;              // index of the smallest term
    bool degenerate_e = false;    // E below 1e−12
    bool discriminant_clamped = false;

    static const char* term_name(int index);
};

/// Minimum of the eight step-size caps. The square-root cap is evaluated in
/// the equivalent form 2D/(u + √(u² − 4DEc)), u = a/b + 2E + Dc, which stays
/// finite as E → 0. Throws std::domain_error naming a non-finite term.
GammaMax gamma_max(const ConstantsDE& de, const ConstantsFG& fg, double a, double b, double c,
                   const EpochConstants& ec, int B, int N, double norm_c);

/// All ladder quantities for one epoch.
struct EpochTheory {
    std::size_t ell = 0;
    long r = 1;
    double gamma = 0.0;
    EpochConstants ec;
    double lambda = 0.0;
    double D = 0.0, E = 0.0, F = 0.0, G = 0.0, K = 0.0;
    double c = 0.0, rho = 0.0;
    double a = 0.0;        // a_ℓ: product-form recursion; ℓ = 0 uses the static-case a₀
    double b = 0.0;        // B·diam²
    double b0_static = 0.0;  // ℓ = 0 only: D₀a₀/K₀
    double b_check = 0.0;  // β-bound constant used by the trace check
    double d = 0.0;        // B²m‖C‖²b
    double V = 0.0;        // V_ℓ: sum form
    GammaMax gmax;
    bool gamma_ok = false;
    bool tracking_hypothesis = false;  // 2/(B(L_x + L_y‖C‖²)) ≤ 1

    double alpha_bound() const;
    double beta_bound() const;
    double delta_bound() const;
};

/// The a_ℓ recursion carried across epochs.
class BoundLadder {
public:
    explicit BoundLadder(TheoryParams params) : params_(params) {}

    /// Quantities for the next epoch without committing them.
    EpochTheory evaluate(const EpochConstants& ec, double gamma, long r) const;
    const EpochTheory& push(const EpochConstants& ec, double gamma, long r);

    /// Fixed point γ = fraction·γ_max(γ) for the next epoch, by iteration
    /// from γ = 0. Throws std::runtime_error if it does not settle.
    double auto_gamma(const EpochConstants& ec, long r, double fraction = 0.9) const;

    const TheoryParams& params() const { return params_; }
    const std::vector<EpochTheory>& epochs() const { return epochs_; }

private:
    TheoryParams params_;
    std::vector<EpochTheory> epochs_;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct BoundTriple {
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 0.0;
};

/// (a_ℓρ^{r−1}, b_ℓρ^{r−1}, d_ℓρ^{r−1}) per epoch. Throws PreconditionError
/// naming the violated γ_max term when some γ_ℓ ∉ (0, γ_max,ℓ).
std::vector<BoundTriple> rate_and_bounds(const std::vector<EpochTheory>& ladder);

/// V ρ/(1 − ρ); +∞ when ρ rounds to 1.
double asymptotic_bound(double V, double rho);

struct AsymptoticSummary {
    double V_inf = 0.0;
    double rho_inf = 0.0;
    double bound = 0.0;
};

/// V_∞ = max{a₀, sup V_ℓ}, ρ_∞ = sup ρ_ℓ. Throws PreconditionError if some
/// r_ℓ < 2.
AsymptoticSummary asymptotic_bound(const std::vector<EpochTheory>& ladder);

enum class RminMode { finite, asymptotic };

/// Smallest integer r ≥ 2 with α(η_ℓ) ≤ φ guaranteed. Finite mode scans the
/// self-referential inequality for horizon T; asymptotic mode uses the
/// closed form.
long r_min(double phi, RminMode mode, double V, double rho, long T = 0);

/// Asserts the per-epoch α, β, δ bounds at η_ℓ and, for r_ℓ ≥ 2 after
/// `burn_in` epochs, the asymptotic bound. Throws PreconditionError when a
/// step size is outside (0, γ_max).
CheckReport check_bounds_on_trace(const RunTrace& trace, const MetricSeries& series,
                                  const std::vector<EpochTheory>& ladder, std::size_t burn_in = 10);

/// Per-epoch constants for a finished run and the ladder built from its step
/// sizes.
struct TheoryReport {
    std::vector<EpochConstants> constants;
    BoundLadder ladder{TheoryParams{}};
};

TheoryReport evaluate_theory(const RunTrace& trace, const ConstantsOptions& options = {});

/// Step policy γ_ℓ = fraction·γ_max,ℓ. Constants are computed from the epoch
/// and its minimizer when the epoch starts; the ladder persists across epochs.
StepPolicy auto_steps(const Problem& problem, int B, std::vector<long> r_per_epoch,
                      const ConstantsOptions& options = {}, double fraction = 0.9);

/// One `name = value` line per constant, full precision.
std::string constants_report(const std::vector<EpochTheory>& ladder, const TheoryParams& params);

}  // namespace afo

#endif  // AFO_THEORY_HPP
