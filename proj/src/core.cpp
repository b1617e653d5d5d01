#include "afo/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afo {

BlockLayout::BlockLayout(std::vector<int> input_dims, std::vector<int> output_dims)
    : input_dims_(std::move(input_dims)), output_dims_(std::move(output_dims)) {
    if (input_dims_.empty()) throw std::invalid_argument("BlockLayout: need at least one agent");
    if (input_dims_.size() != output_dims_.size())
        throw std::invalid_argument("BlockLayout: input_dims and output_dims differ in length");
    for (std::size_t i = 0; i < input_dims_.size(); ++i) {
        if (input_dims_[i] < 1 || output_dims_[i] < 1)
            throw std::invalid_argument("BlockLayout: block dimensions must be positive (agent " +
                                        std::to_string(i) + ")");
        input_offsets_.push_back(n_);
        output_offsets_.push_back(m_);
        n_ += input_dims_[i];
        m_ += output_dims_[i];
    }
}

BlockLayout BlockLayout::uniform(int agents, int n_i, int m_i) {
    if (agents < 1) throw std::invalid_argument("BlockLayout: need at least one agent");
    return BlockLayout(std::vector<int>(static_cast<std::size_t>(agents), n_i),
                       std::vector<int>(static_cast<std::size_t>(agents), m_i));
}

void BlockLayout::check_agent(int i) const {
    if (i < 0 || i >= agents())
        throw std::out_of_range("agent index " + std::to_string(i) + " outside [0, " +
                                std::to_string(agents()) + ")");
}

BoxSet::BoxSet(VectorXd lower, VectorXd upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size())
        throw std::invalid_argument("BoxSet: lower and upper differ in length");
    if (lower_.size() == 0) throw std::invalid_argument("BoxSet: empty dimension");
    for (Eigen::Index j = 0; j < lower_.size(); ++j) {
        if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j]))
            throw std::invalid_argument("BoxSet: bounds must be finite (compact set)");
        if (lower_[j] > upper_[j])
            throw std::invalid_argument("BoxSet: lower > upper at coordinate " + std::to_string(j));
    }
}

BoxSet BoxSet::cube(int n, double lo, double hi) {
    return BoxSet(VectorXd::Constant(n, lo), VectorXd::Constant(n, hi));
}

bool BoxSet::contains(const VectorXd& v, double tol) const {
    if (v.size() != lower_.size()) return false;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (v[j] < lower_[j] - tol || v[j] > upper_[j] + tol) return false;
    return true;
}

BoxSet BoxSet::block(const BlockLayout& layout, int i) const {
    layout.check_agent(i);
    if (layout.n() != dim()) throw std::invalid_argument("BoxSet::block: layout dimension mismatch");
    const int off = layout.input_offset(i);
    const int len = layout.input_dim(i);
    return BoxSet(lower_.segment(off, len), upper_.segment(off, len));
}

OutputMap::OutputMap(MatrixXd entries, const BlockLayout& layout) : c_(std::move(entries)) {
    if (c_.rows() != layout.m() || c_.cols() != layout.n())
        throw std::invalid_argument("OutputMap: expected " + std::to_string(layout.m()) + "x" +
                                    std::to_string(layout.n()) + " matrix, got " +
                                    std::to_string(c_.rows()) + "x" + std::to_string(c_.cols()));
    if (!c_.allFinite()) throw std::invalid_argument("OutputMap: non-finite entry");
    for (int i = 0; i < layout.agents(); ++i) {
        cols_.emplace_back(c_.middleCols(layout.input_offset(i), layout.input_dim(i)));
        rows_.emplace_back(c_.middleRows(layout.output_offset(i), layout.output_dim(i)));
    }
    norm_ = spectral_norm(c_);
}

VectorXd project_box(const VectorXd& v, const BoxSet& set) {
    if (v.size() != set.dim())
        throw std::invalid_argument("project_box: vector has length " + std::to_string(v.size()) +
                                    ", set has dimension " + std::to_string(set.dim()));
    return v.cwiseMax(set.lower()).cwiseMin(set.upper());
}

namespace {

// Power iteration on MᵀM; used only beyond the size where a full SVD is cheap.
double power_norm(const MatrixXd& m) {
    const MatrixXd gram = m.transpose() * m;
    VectorXd v = VectorXd::Ones(gram.cols()).normalized();
    double estimate = 0.0;
    for (int it = 0; it < 100000; ++it) {
        VectorXd w = gram * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        w /= nw;
        const double next = std::sqrt(nw);
        const bool done = std::abs(next - estimate) <= 1e-14 * next;
        estimate = next;
        v = w;
        if (done) break;
    }
    return estimate;
}

}  // namespace

double spectral_norm(const MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    if (std::min(m.rows(), m.cols()) <= 64) {
        Eigen::JacobiSVD<MatrixXd> svd(m);
        return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    }
    return power_norm(m);
}

double diameter(const BoxSet& set) { return (set.upper() - set.lower()).norm(); }

BlockProjector box_projector(const BoxSet& set, const BlockLayout& layout) {
    std::vector<BoxSet> blocks;
    for (int i = 0; i < layout.agents(); ++i) blocks.push_back(set.block(layout, i));
    return [blocks = std::move(blocks)](int agent, const VectorXd& v) {
        return project_box(v, blocks.at(static_cast<std::size_t>(agent)));
    };
}

}  // namespace afo
