#include "afo/objective.hpp"

#include "afo/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afo {

namespace {

void require_symmetric_pd(const MatrixXd& M, const char* name, int dim) {
    if (M.rows() != dim || M.cols() != dim)
        throw std::invalid_argument(std::string("matrix ") + name + " must be " +
                                    std::to_string(dim) + "x" + std::to_string(dim));
    if (!M.allFinite()) throw std::invalid_argument(std::string("matrix ") + name + " has non-finite entries");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument(std::string("matrix ") + name + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument(std::string("matrix ") + name +
                                    " is not positive definite (min eigenvalue " +
                                    std::to_string(eig.eigenvalues().minCoeff()) + ")");
}

void require_size(const VectorXd& v, Eigen::Index n, const char* what) {
    if (v.size() != n)
        throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(n) +
                                    ", got " + std::to_string(v.size()));
}

Eigen::VectorXd eigenvalues(const MatrixXd& M) {
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

QuadraticEpoch QuadraticEpoch::from_linear_output(double t, MatrixXd Q, VectorXd q, MatrixXd P,
                                                  const VectorXd& p) {
    QuadraticEpoch e;
    e.t = t;
    e.theta = -P.ldlt().solve(p);
    e.constant_offset = -0.5 * e.theta.dot(P * e.theta);
    e.Q = std::move(Q);
    e.q = std::move(q);
    e.P = std::move(P);
    return e;
}

void QuadraticEpoch::validate(const BlockLayout& layout) const {
    require_size(q, layout.n(), "q");
    require_size(theta, layout.m(), "theta");
    require_symmetric_pd(Q, "Q", layout.n());
    require_symmetric_pd(P, "P", layout.m());
    if (!q.allFinite() || !theta.allFinite() || !std::isfinite(constant_offset) || !std::isfinite(t))
        throw std::invalid_argument("epoch has non-finite data");
}

double eval_f(const QuadraticEpoch& epoch, const VectorXd& x) {
    require_size(x, epoch.q.size(), "eval_f x");
    return 0.5 * x.dot(epoch.Q * x) + epoch.q.dot(x);
}

double eval_g(const QuadraticEpoch& epoch, const VectorXd& y) {
    require_size(y, epoch.theta.size(), "eval_g y");
    const VectorXd d = y - epoch.theta;
    return 0.5 * d.dot(epoch.P * d);
}

double eval_J(const QuadraticEpoch& epoch, const VectorXd& x, const VectorXd& y) {
    return eval_f(epoch, x) + eval_g(epoch, y) + epoch.constant_offset;
}

VectorXd grad_f(const QuadraticEpoch& epoch, const VectorXd& x) {
    require_size(x, epoch.q.size(), "grad_f x");
    return epoch.Q * x + epoch.q;
}

VectorXd grad_g(const QuadraticEpoch& epoch, const VectorXd& y) {
    require_size(y, epoch.theta.size(), "grad_g y");
    return epoch.P * (y - epoch.theta);
}

VectorXd grad_composite(const QuadraticEpoch& epoch, const OutputMap& map, const VectorXd& x) {
    return grad_f(epoch, x) + map.matrix().transpose() * grad_g(epoch, map.matrix() * x);
}

VectorXd grad_block(const QuadraticEpoch& epoch, const OutputMap& map, const BlockLayout& layout,
                    int i, const VectorXd& x_local, const VectorXd& y_local) {
    layout.check_agent(i);
    require_size(x_local, layout.n(), "grad_block x_local");
    require_size(y_local, layout.m(), "grad_block y_local");
    const int off = layout.input_offset(i);
    const int len = layout.input_dim(i);
    VectorXd g = epoch.Q.middleRows(off, len) * x_local + epoch.q.segment(off, len);
    g.noalias() += map.column_block(i).transpose() * (epoch.P * (y_local - epoch.theta));
    return g;
}

EpochSchedule::EpochSchedule(std::vector<EpochSource> sources, std::vector<long> ticks_per_epoch, int B)
    : sources_(std::move(sources)), kappa_(std::move(ticks_per_epoch)), B_(B) {
    if (B_ < 1) throw std::invalid_argument("EpochSchedule: B must be positive");
    if (sources_.empty()) throw std::invalid_argument("EpochSchedule: no epochs");
    if (sources_.size() != kappa_.size())
        throw std::invalid_argument("EpochSchedule: one tick count per epoch required");
    long eta = 0;
    for (std::size_t ell = 0; ell < kappa_.size(); ++ell) {
        if (kappa_[ell] < B_ || kappa_[ell] % B_ != 0)
            throw std::invalid_argument("EpochSchedule: epoch " + std::to_string(ell) +
                                        " has kappa=" + std::to_string(kappa_[ell]) +
                                        ", need a positive multiple of B=" + std::to_string(B_));
        eta += kappa_[ell];
        eta_.push_back(eta);
    }
}

EpochSchedule EpochSchedule::uniform(std::vector<EpochSource> sources, long ticks_per_epoch, int B) {
    const std::size_t count = sources.size();
    return EpochSchedule(std::move(sources), std::vector<long>(count, ticks_per_epoch), B);
}

std::size_t EpochSchedule::epoch_of_tick(long k) const {
    if (k < 0 || k >= horizon()) throw std::out_of_range("tick " + std::to_string(k) + " outside horizon");
    return static_cast<std::size_t>(std::upper_bound(eta_.begin(), eta_.end(), k) - eta_.begin());
}

std::size_t EpochSchedule::epoch_of_state(long k) const {
    if (k < 0 || k > horizon()) throw std::out_of_range("state " + std::to_string(k) + " outside horizon");
    if (k == 0) return 0;
    return static_cast<std::size_t>(std::lower_bound(eta_.begin(), eta_.end(), k) - eta_.begin());
}

VectorXd affine_abs_bound(const MatrixXd& A, const VectorXd& b, const VectorXd& lower,
                          const VectorXd& upper) {
    const VectorXd center = 0.5 * (lower + upper);
    const VectorXd radius = 0.5 * (upper - lower);
    const VectorXd mid = A * center + b;
    return mid.cwiseAbs() + A.cwiseAbs() * radius;
}

double estimate_error_bound(const QuadraticEpoch& epoch, const VectorXd& x_star, const BoxSet& set,
                            const OutputMap& map, int samples, double safety, std::uint64_t seed) {
    Rng rng(seed, 0, Stream::sampling);
    double worst = 0.0;
    VectorXd x(set.dim());
    for (int s = 0; s < samples; ++s) {
        for (int j = 0; j < set.dim(); ++j) x[j] = rng.uniform(set.lower()[j], set.upper()[j]);
        const double residual = (x - project_box(x - grad_composite(epoch, map, x), set)).norm();
        if (residual < 1e-300) continue;
        worst = std::max(worst, (x - x_star).norm() / residual);
    }
    return safety * worst;
}

namespace {

// Evaluates |J_ℓ(x, Cx) − J_{ℓ−1}(x, Cx)| on seeded samples plus the box corners
// for small n.
double sampled_time_drift(const QuadraticEpoch& now, const QuadraticEpoch& before, const BoxSet& set,
                          const OutputMap& map, int samples, std::uint64_t seed) {
    const int n = set.dim();
    auto drift = [&](const VectorXd& x) {
        const VectorXd y = map.matrix() * x;
        return std::abs(eval_J(now, x, y) - eval_J(before, x, y));
    };
    double worst = 0.0;
    Rng rng(seed, 1, Stream::sampling);
    VectorXd x(n);
    for (int s = 0; s < samples; ++s) {
        for (int j = 0; j < n; ++j) x[j] = rng.uniform(set.lower()[j], set.upper()[j]);
        worst = std::max(worst, drift(x));
    }
    if (n <= 12) {
        for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
            for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1UL ? set.upper()[j] : set.lower()[j];
            worst = std::max(worst, drift(x));
        }
    }
    return worst;
}

}  // namespace

EpochConstants epoch_constants(const QuadraticEpoch& epoch, const VectorXd& x_star,
                               const QuadraticEpoch* prev, const VectorXd* prev_x_star,
                               const BoxSet& set, const OutputMap& map, const BlockLayout& layout,
                               const ConstantsOptions& options) {
    epoch.validate(layout);
    if (prev) prev->validate(layout);

    EpochConstants c;
    const VectorXd q_eigs = eigenvalues(epoch.Q);
    const VectorXd p_eigs = eigenvalues(epoch.P);
    c.L_x = q_eigs.maxCoeff();
    c.L_y = p_eigs.maxCoeff();
    c.p_strong = std::min(q_eigs.minCoeff(), p_eigs.minCoeff());
    c.L = std::sqrt(c.L_x * c.L_x + map.norm() * map.norm() * c.L_y * c.L_y);

    c.M_x = affine_abs_bound(epoch.Q, epoch.q, set.lower(), set.upper()).norm();
    // 𝒴 = C𝒳 is enclosed by the interval image of the box.
    const VectorXd y_center = map.matrix() * (0.5 * (set.lower() + set.upper()));
    const VectorXd y_radius = map.matrix().cwiseAbs() * (0.5 * (set.upper() - set.lower()));
    c.M_y = affine_abs_bound(epoch.P, -epoch.P * epoch.theta, y_center - y_radius, y_center + y_radius).norm();
    c.L_J = std::sqrt(c.M_x * c.M_x + c.M_y * c.M_y);

    if (prev) {
        if (!prev_x_star) throw std::invalid_argument("epoch_constants: previous minimizer required");
        c.sigma = (x_star - *prev_x_star).norm();
        c.Delta = std::abs(epoch.t - prev->t);
        if (c.Delta > 0.0)
            c.L_t = sampled_time_drift(epoch, *prev, set, map, options.lt_samples, options.seed) / c.Delta;
    }

    c.lambda_eb = options.lambda_eb ? *options.lambda_eb
                                    : estimate_error_bound(epoch, x_star, set, map, options.eb_samples,
                                                           options.eb_safety, options.seed);
    return c;
}

}  // namespace afo
