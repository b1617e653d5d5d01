#include "afo/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace afo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio_or_inf(double num, double den) { return den == 0.0 ? kInf : num / den; }

}  // namespace

TheoryParams TheoryParams::from(const Problem& problem, int B) {
    return {B, problem.layout.agents(), problem.layout.m(), problem.map.norm(), diameter(problem.set)};
}

double sum_terms(const std::vector<Term>& terms) {
    double s = 0.0;
    for (const auto& t : terms) s += t.value;
    return s;
}

ConstantsDE constants_DE(const EpochConstants& ec, double gamma, int B, int N, double norm_c) {
    const double c2 = norm_c * norm_c;
    ConstantsDE de;
    de.D = (2.0 - gamma * ((1.0 + B) * ec.L_x + (1.0 + static_cast<double>(B) * N) * c2 * ec.L_y)) / 2.0;
    de.E = N * B * (ec.L_x + ec.L_y * N * c2) / 2.0;
    return de;
}

std::vector<Term> f_terms(const EpochConstants& ec, int B_, int N_, int m_, double norm_c, double lambda) {
    const double B = B_, N = N_, m = m_;
    const double B2 = B * B, B3 = B2 * B;
    const double C2 = norm_c * norm_c, C4 = C2 * C2, C6 = C4 * C2;
    const double L2 = ec.L * ec.L, Lx = ec.L_x, Ly = ec.L_y;
    const double N2 = N * N, lam2 = lambda * lambda, w = 1.0 + lam2;
    return {
        {"w*36B^3C^6L^2Ly^2N^2m", w * 36 * B3 * C6 * L2 * Ly * Ly * N2 * m},
        {"w*72B^3C^4L^2LxLyN^2m", w * 72 * B3 * C4 * L2 * Lx * Ly * N2 * m},
        {"w*36BL^2Lx^2N^2", w * 36 * B * L2 * Lx * Lx * N2},
        {"w*36B^3C^2L^2Lx^2N^2m", w * 36 * B3 * C2 * L2 * Lx * Lx * N2 * m},
        {"w*36BC^4L^2Ly^2N^2", w * 36 * B * C4 * L2 * Ly * Ly * N2},
        {"w*18C^2LxLyN", w * 18 * C2 * Lx * Ly * N},
        {"w*72BC^2L^2LxLyN^2", w * 72 * B * C2 * L2 * Lx * Ly * N2},
        {"w*9C^4Ly^2N", w * 9 * C4 * Ly * Ly * N},
        {"3B^2C^6L^2Ly^2N^2m", 3 * B2 * C6 * L2 * Ly * Ly * N2 * m},
        {"C^4*72B^3L^2LyN^2m", C4 * 72 * B3 * L2 * Ly * N2 * m},
        {"C^4*6B^2L^2LxLyN^2m", C4 * 6 * B2 * L2 * Lx * Ly * N2 * m},
        {"C^4*6B^2L^2LyN^2m", C4 * 6 * B2 * L2 * Ly * N2 * m},
        {"C^4*3L^2Ly^2N^2", C4 * 3 * L2 * Ly * Ly * N2},
        {"C^4*3B^2Ly^2Nm", C4 * 3 * B2 * Ly * Ly * N * m},
        {"C^2*96B^3L^2N^2m", C2 * 96 * B3 * L2 * N2 * m},
        {"C^2*72B^3L^2LxN^2m", C2 * 72 * B3 * L2 * Lx * N2 * m},
        {"C^2*72BL^2LyN^2", C2 * 72 * B * L2 * Ly * N2},
        {"C^2*60B^3L^2N^2lam^2m", C2 * 60 * B3 * L2 * N2 * lam2 * m},
        {"C^2*18LyN", C2 * 18 * Ly * N},
        {"C^2*8B^2L^2N^2m", C2 * 8 * B2 * L2 * N2 * m},
        {"C^2*6B^2L^2LxN^2m", C2 * 6 * B2 * L2 * Lx * N2 * m},
        {"C^2*6L^2LxLyN^2", C2 * 6 * L2 * Lx * Ly * N2},
        {"C^2*6L^2LyN^2", C2 * 6 * L2 * Ly * N2},
        {"C^2*3B^2L^2Lx^2N^2m", C2 * 3 * B2 * L2 * Lx * Lx * N2 * m},
        {"3L^2Lx^2N^2", 3 * L2 * Lx * Lx * N2},
        {"96BL^2N^2", 96 * B * L2 * N2},
        {"6L^2LxN^2", 6 * L2 * Lx * N2},
        {"8L^2N^2", 8 * L2 * N2},
        {"60BL^2N^2lam^2", 60 * B * L2 * N2 * lam2},
        {"72BL^2LxN^2", 72 * B * L2 * Lx * N2},
        {"12Lx^2N", 12 * Lx * Lx * N},
        {"9Lx^2Nlam^2", 9 * Lx * Lx * N * lam2},
        {"18LxN", 18 * Lx * N},
        {"15Nlam^2", 15 * N * lam2},
        {"24N", 24 * N},
        {"2", 2.0},
    };
}

std::vector<Term> g_terms(const EpochConstants& ec, int B_, int N_, int m_, double norm_c, double lambda) {
    const double B = B_, N = N_, m = m_;
    const double B2 = B * B, B3 = B2 * B;
    const double C2 = norm_c * norm_c, C4 = C2 * C2, C6 = C4 * C2;
    const double L2 = ec.L * ec.L, Lx = ec.L_x, Ly = ec.L_y;
    const double lam2 = lambda * lambda, w = 1.0 + lam2;
    return {
        {"w*72B^3C^4L^2LxLyNm", w * 72 * B3 * C4 * L2 * Lx * Ly * N * m},
        {"w*72BC^2L^2LxLyN", w * 72 * B * C2 * L2 * Lx * Ly * N},
        {"w*36B^3C^6L^2Ly^2Nm", w * 36 * B3 * C6 * L2 * Ly * Ly * N * m},
        {"w*36B^3C^2L^2Lx^2Nm", w * 36 * B3 * C2 * L2 * Lx * Lx * N * m},
        {"w*36BC^4L^2Ly^2N", w * 36 * B * C4 * L2 * Ly * Ly * N},
        {"w*36BL^2Lx^2N", w * 36 * B * L2 * Lx * Lx * N},
        {"3B^2C^6L^2Ly^2Nm", 3 * B2 * C6 * L2 * Ly * Ly * N * m},
        {"C^4*72B^3L^2LyNm", C4 * 72 * B3 * L2 * Ly * N * m},
        {"C^4*6B^2L^2LxLyNm", C4 * 6 * B2 * L2 * Lx * Ly * N * m},
        {"C^4*6B^2L^2LyNm", C4 * 6 * B2 * L2 * Ly * N * m},
        {"C^4*3B^2Ly^2m", C4 * 3 * B2 * Ly * Ly * m},
        {"C^4*3L^2Ly^2N", C4 * 3 * L2 * Ly * Ly * N},
        {"C^2*96B^3L^2Nm", C2 * 96 * B3 * L2 * N * m},
        {"C^2*72B^3L^2LxNm", C2 * 72 * B3 * L2 * Lx * N * m},
        {"C^2*72BL^2LyN", C2 * 72 * B * L2 * Ly * N},
        {"C^2*60B^3L^2Nlam^2m", C2 * 60 * B3 * L2 * N * lam2 * m},
        {"C^2*8B^2L^2Nm", C2 * 8 * B2 * L2 * N * m},
        {"C^2*6B^2L^2LxNm", C2 * 6 * B2 * L2 * Lx * N * m},
        {"C^2*6L^2LxLyN", C2 * 6 * L2 * Lx * Ly * N},
        {"C^2*6L^2LyN", C2 * 6 * L2 * Ly * N},
        {"C^2*3B^2L^2Lx^2Nm", C2 * 3 * B2 * L2 * Lx * Lx * N * m},
        {"C^2*BLyN", C2 * B * Ly * N},
        {"96BL^2N", 96 * B * L2 * N},
        {"72BL^2LxN", 72 * B * L2 * Lx * N},
        {"60BL^2Nlam^2", 60 * B * L2 * N * lam2},
        {"8L^2N", 8 * L2 * N},
        {"6L^2LxN", 6 * L2 * Lx * N},
        {"3Lx^2", 3 * Lx * Lx},
        {"3L^2Lx^2N", 3 * L2 * Lx * Lx * N},
        {"BLx", B * Lx},
    };
}

ConstantsFG constants_FG(const EpochConstants& ec, int B, int N, int m, double norm_c, double lambda) {
    return {0.5 * sum_terms(f_terms(ec, B, N, m, norm_c, lambda)),
            0.5 * N * sum_terms(g_terms(ec, B, N, m, norm_c, lambda))};
}

double coupling_factor(double D, double E, double F, double G) {
    return 8.0 * E * (G / F + E / D) * F;
}

const char* GammaMax::term_name(int index) {
    static const char* names[kTerms] = {"2/((3N+1)B*Lx + (3N^2+1)B*|C|^2*Ly)",
                                        "2/((1+B)Lx + (1+BN)|C|^2*Ly)",
                                        "D/E",
                                        "1/(G/F + E/D)",
                                        "1/(2c)",
                                        "D/(8F(G/F + E/D)c)",
                                        "root term in a/b, E, D, c",
                                        "1/2"};
    return index >= 0 && index < kTerms ? names[index] : "?";
}

GammaMax gamma_max(const ConstantsDE& de, const ConstantsFG& fg, double a, double b, double c,
                   const EpochConstants& ec, int B, int N, double norm_c) {
    const double c2 = norm_c * norm_c;
    const double D = de.D, E = de.E, F = fg.F, G = fg.G;
    const double mix = G / F + E / D;
    GammaMax g;
    g.terms[0] = ratio_or_inf(2.0, (3.0 * N + 1.0) * B * ec.L_x + (3.0 * N * N + 1.0) * B * c2 * ec.L_y);
    g.terms[1] = ratio_or_inf(2.0, (1.0 + B) * ec.L_x + (1.0 + static_cast<double>(B) * N) * c2 * ec.L_y);
    g.terms[2] = ratio_or_inf(D, E);
    g.terms[3] = ratio_or_inf(1.0, mix);
    g.terms[4] = ratio_or_inf(1.0, 2.0 * c);
    g.terms[5] = ratio_or_inf(D, 8.0 * F * mix * c);
    const double u = a / b + 2.0 * E + D * c;
    double disc = u * u - 4.0 * D * E * c;
    if (disc < 0.0) {
        disc = 0.0;
        g.discriminant_clamped = true;
    }
    g.degenerate_e = E < 1e-12;
    g.terms[6] = ratio_or_inf(2.0 * D, u + std::sqrt(disc));
    g.terms[7] = 0.5;
    for (int i = 0; i < GammaMax::kTerms; ++i)
        if (std::isnan(g.terms[static_cast<std::size_t>(i)]))
            throw std::domain_error(std::string("gamma_max: term ") + GammaMax::term_name(i) + " is not a number");
    const auto it = std::min_element(g.terms.begin(), g.terms.end());
    g.binding = static_cast<int>(it - g.terms.begin());
    g.value = *it;
    return g;
}

double EpochTheory::alpha_bound() const { return a * std::pow(rho, static_cast<double>(r - 1)); }
double EpochTheory::beta_bound() const { return b_check * std::pow(rho, static_cast<double>(r - 1)); }
double EpochTheory::delta_bound() const { return d * std::pow(rho, static_cast<double>(r - 1)); }

EpochTheory BoundLadder::evaluate(const EpochConstants& ec, double gamma, long r) const {
    const TheoryParams& p = params_;
    EpochTheory t;
    t.ell = epochs_.size();
    t.r = r;
    t.gamma = gamma;
    t.ec = ec;
    t.lambda = ec.lambda_eb;
    const ConstantsDE de = constants_DE(ec, gamma, p.B, p.N, p.norm_c);
    const ConstantsFG fg = constants_FG(ec, p.B, p.N, p.m, p.norm_c, t.lambda);
    t.D = de.D;
    t.E = de.E;
    t.F = fg.F;
    t.G = fg.G;
    t.K = coupling_factor(t.D, t.E, t.F, t.G);
    t.c = t.D / (2.0 * t.F + 2.0 * t.D);
    t.rho = 1.0 - gamma * t.c;
    t.b = p.B * p.diam * p.diam;
    t.d = static_cast<double>(p.B) * p.B * p.m * p.norm_c * p.norm_c * t.b;

    const double drift = 2.0 * ec.Delta * ec.L_t;
    const double shape = t.K * p.B * p.B * p.diam * p.diam * (ec.L_x + ec.L_y * p.norm_c * p.norm_c) / (2.0 * t.D);
    const double grad_scale = (ec.M_x + ec.M_y * p.norm_c) * p.B * p.diam;
    t.V = drift + ec.L_J * ec.sigma * (1.0 + p.norm_c) + grad_scale + shape;
    if (epochs_.empty()) {
        t.a = std::max(ec.L_J * (1.0 + p.norm_c) * p.diam, t.K / t.D * p.B * p.diam * p.diam);
        t.b0_static = t.K > 0.0 ? t.D * t.a / t.K : kInf;
        t.b_check = std::isfinite(t.b0_static) ? std::max(t.b, t.b0_static) : t.b;
    } else {
        const EpochTheory& prev = epochs_.back();
        t.a = prev.a * std::pow(prev.rho, static_cast<double>(prev.r - 1)) + drift +
              ec.L_J * ec.sigma * (1.0 + p.norm_c) * grad_scale + shape;
        t.b_check = t.b;
    }
    t.gmax = gamma_max(de, fg, t.a, t.b, t.c, ec, p.B, p.N, p.norm_c);
    t.gamma_ok = gamma > 0.0 && gamma < t.gmax.value && t.D > 0.0;
    const double hyp_den = p.B * (ec.L_x + ec.L_y * p.norm_c * p.norm_c);
    t.tracking_hypothesis = hyp_den > 0.0 && 2.0 / hyp_den <= 1.0;
    return t;
}

const EpochTheory& BoundLadder::push(const EpochConstants& ec, double gamma, long r) {
    epochs_.push_back(evaluate(ec, gamma, r));
    return epochs_.back();
}

double BoundLadder::auto_gamma(const EpochConstants& ec, long r, double fraction) const {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("auto_gamma: fraction must lie in (0, 1)");
    double gamma = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double next = fraction * evaluate(ec, gamma, r).gmax.value;
        if (!(next > 0.0) || !std::isfinite(next)) throw std::runtime_error("auto_gamma: step-size cap is not positive");
        const bool settled = std::abs(next - gamma) <= 1e-14 * next;
        gamma = next;
        if (settled) break;
    }
    for (int shrink = 0; shrink < 60; ++shrink) {
        if (evaluate(ec, gamma, r).gamma_ok) return gamma;
        gamma *= fraction;
    }
    throw std::runtime_error("auto_gamma: no admissible step size found");
}

std::vector<BoundTriple> rate_and_bounds(const std::vector<EpochTheory>& ladder) {
    std::vector<BoundTriple> out;
    for (const auto& t : ladder) {
        if (!t.gamma_ok) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "epoch " << t.ell << ": step size " << t.gamma << " is not in (0, gamma_max = " << t.gmax.value
                << "); binding term " << GammaMax::term_name(t.gmax.binding);
            if (t.D <= 0.0) msg << "; D = " << t.D << " is not positive";
            throw PreconditionError(msg.str());
        }
        out.push_back({t.alpha_bound(), t.beta_bound(), t.delta_bound()});
    }
    return out;
}

double asymptotic_bound(double V, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("asymptotic_bound: rho must lie in [0, 1]");
    if (rho == 1.0) return std::numeric_limits<double>::infinity();
    return V * rho / (1.0 - rho);
}

AsymptoticSummary asymptotic_bound(const std::vector<EpochTheory>& ladder) {
    if (ladder.empty()) throw std::invalid_argument("asymptotic_bound: empty ladder");
    AsymptoticSummary s;
    s.V_inf = ladder.front().a;
    for (const auto& t : ladder) {
        if (t.r < 2)
            throw PreconditionError("asymptotic_bound: epoch " + std::to_string(t.ell) + " has r = " +
                                    std::to_string(t.r) + "; the asymptotic bound needs r >= 2 in every epoch");
        s.V_inf = std::max(s.V_inf, t.V);
        s.rho_inf = std::max(s.rho_inf, t.rho);
    }
    s.bound = asymptotic_bound(s.V_inf, s.rho_inf);
    return s;
}

long r_min(double phi, RminMode mode, double V, double rho, long T) {
    if (!(phi > 0.0)) throw std::invalid_argument("r_min: phi must be positive");
    if (!(V > 0.0)) throw std::invalid_argument("r_min: V must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("r_min: rho must lie in (0, 1)");
    constexpr double tol = 1e-12;
    const double log_rho = std::log(rho);
    const double closed = 1.0 + std::log(phi / (V + phi)) / log_rho;
    if (mode == RminMode::asymptotic) return std::max(2L, static_cast<long>(std::ceil(closed - tol)));
    if (T < 0) throw std::invalid_argument("r_min: T must be non-negative");
    for (long r = 2;; ++r) {
        const double decay = std::exp(static_cast<double>(T + 2) * static_cast<double>(r - 1) * log_rho);
        const double rhs = 1.0 + std::log((V * decay + phi) / (V + phi)) / log_rho;
        if (static_cast<double>(r) >= rhs - tol) return r;
    }
}

CheckReport check_bounds_on_trace(const RunTrace& trace, const MetricSeries& series,
                                  const std::vector<EpochTheory>& ladder, std::size_t burn_in) {
    if (ladder.size() != trace.epochs.size())
        throw std::invalid_argument("check_bounds_on_trace: ladder and trace epoch counts differ");
    const std::vector<BoundTriple> bounds = rate_and_bounds(ladder);
    InequalityCheck alpha{"tracking_alpha"}, beta{"tracking_beta"}, delta{"tracking_delta"}, asym{"asymptotic"};
    for (std::size_t ell = 0; ell < ladder.size(); ++ell) {
        const long k = trace.eta(ell);
        const double eps = series.oracle_slack[ell];
        const double a_k = series.alpha[static_cast<std::size_t>(k)];
        const double b_k = series.beta[static_cast<std::size_t>(k)];
        const double d_k = series.delta[static_cast<std::size_t>(k)];
        alpha.record(k, a_k, bounds[ell].alpha, eps);
        beta.record(k, b_k, bounds[ell].beta, 1e-12 * (1.0 + bounds[ell].beta));
        delta.record(k, d_k, bounds[ell].delta, 1e-12 * (1.0 + bounds[ell].delta));
    }
    const bool long_run = std::all_of(ladder.begin(), ladder.end(), [](const auto& t) { return t.r >= 2; });
    CheckReport report;
    report.checks = {alpha, beta, delta};
    if (long_run && ladder.size() > burn_in) {
        const double bound = asymptotic_bound(ladder).bound;
        for (std::size_t ell = burn_in; ell < ladder.size(); ++ell) {
            const long k = trace.eta(ell);
            asym.record(k, series.alpha[static_cast<std::size_t>(k)], bound, series.oracle_slack[ell]);
        }
        report.checks.push_back(asym);
    }
    return report;
}

TheoryReport evaluate_theory(const RunTrace& trace, const ConstantsOptions& options) {
    TheoryReport rep{{}, BoundLadder(TheoryParams::from(trace.problem, trace.B))};
    const Problem& pr = trace.problem;
    for (std::size_t ell = 0; ell < trace.epochs.size(); ++ell) {
        const QuadraticEpoch* prev = ell ? &trace.epochs[ell - 1] : nullptr;
        const VectorXd* prev_x = ell ? &trace.minimizers[ell - 1].x_star : nullptr;
        rep.constants.push_back(epoch_constants(trace.epochs[ell], trace.minimizers[ell].x_star, prev, prev_x,
                                                pr.set, pr.map, pr.layout, options));
        rep.ladder.push(rep.constants.back(), trace.gammas[ell], trace.kappa[ell] / trace.B);
    }
    return rep;
}

StepPolicy auto_steps(const Problem& problem, int B, std::vector<long> r_per_epoch, const ConstantsOptions& options,
                      double fraction) {
    auto ladder = std::make_shared<BoundLadder>(TheoryParams::from(problem, B));
    return [problem, B, r = std::move(r_per_epoch), options, fraction, ladder](const StepContext& ctx) {
        if (ctx.epoch == 0) *ladder = BoundLadder(TheoryParams::from(problem, B));
        const EpochConstants ec =
            epoch_constants(*ctx.current, ctx.current_solution->x_star, ctx.previous,
                            ctx.previous_solution ? &ctx.previous_solution->x_star : nullptr, problem.set,
                            problem.map, problem.layout, options);
        const long r_ell = r.size() == 1 ? r.front() : r.at(ctx.epoch);
        const double gamma = ladder->auto_gamma(ec, r_ell, fraction);
        ladder->push(ec, gamma, r_ell);
        return gamma;
    };
}

std::string constants_report(const std::vector<EpochTheory>& ladder, const TheoryParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "B = " << p.B << "\nN = " << p.N << "\nm = " << p.m << "\nnorm_C = " << p.norm_c << "\ndiam_X = " << p.diam
        << "\nepochs = " << ladder.size() << '\n';
    for (const auto& t : ladder) {
        const std::string pre = "epoch." + std::to_string(t.ell) + ".";
        const auto line = [&](const char* name, double v) { out << pre << name << " = " << v << '\n'; };
        line("r", static_cast<double>(t.r));
        line("gamma", t.gamma);
        line("L_x", t.ec.L_x);
        line("L_y", t.ec.L_y);
        line("L", t.ec.L);
        line("L_J", t.ec.L_J);
        line("M_x", t.ec.M_x);
        line("M_y", t.ec.M_y);
        line("p_strong", t.ec.p_strong);
        line("sigma", t.ec.sigma);
        line("L_t", t.ec.L_t);
        line("Delta", t.ec.Delta);
        line("lambda_eb", t.lambda);
        line("D", t.D);
        line("E", t.E);
        line("F", t.F);
        line("G", t.G);
        line("c", t.c);
        line("rho", t.rho);
        line("a_product_form", t.a);
        line("V_sum_form", t.V);
        line("b", t.b);
        if (t.ell == 0) line("b0_static", t.b0_static);
        line("b_check", t.b_check);
        line("d", t.d);
        for (int i = 0; i < GammaMax::kTerms; ++i)
            out << pre << "gamma_max.term" << i << " = " << t.gmax.terms[static_cast<std::size_t>(i)] << "  # "
                << GammaMax::term_name(i) << '\n';
        line("gamma_max", t.gmax.value);
        out << pre << "gamma_max.binding = " << t.gmax.binding << '\n';
        out << pre << "gamma_max.degenerate_E = " << (t.gmax.degenerate_e ? "true" : "false") << '\n';
        out << pre << "gamma_ok = " << (t.gamma_ok ? "true" : "false") << '\n';
        out << pre << "tracking_hypothesis = " << (t.tracking_hypothesis ? "true" : "false") << '\n';
        line("alpha_bound", t.alpha_bound());
        line("beta_bound", t.beta_bound());
        line("delta_bound", t.delta_bound());
    }
    return out.str();
}

}  // namespace afo
