#ifndef AFO_CORE_HPP
#define AFO_CORE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace afo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Partition of the input vector (n_i per agent) and output vector (m_i per
/// agent) across N agents. Offsets are derived once at construction.
class BlockLayout {
public:
    BlockLayout() = default;
    BlockLayout(std::vector<int> input_dims, std::vector<int> output_dims);

    /// N agents, each owning `n_i` inputs and `m_i` outputs.
    static BlockLayout uniform(int agents, int n_i, int m_i);

    int agents() const { return static_cast<int>(input_dims_.size()); }
    int n() const { return n_; }
    int m() const { return m_; }

    int input_dim(int i) const { return input_dims_.at(static_cast<std::size_t>(i)); }
    int output_dim(int i) const { return output_dims_.at(static_cast<std::size_t>(i)); }
    int input_offset(int i) const { return input_offsets_.at(static_cast<std::size_t>(i)); }
    int output_offset(int i) const { return output_offsets_.at(static_cast<std::size_t>(i)); }

    const std::vector<int>& input_dims() const { return input_dims_; }
    const std::vector<int>& output_dims() const { return output_dims_; }

    /// Throws std::out_of_range for an invalid agent index.
    void check_agent(int i) const;

    bool operator==(const BlockLayout&) const = default;

private:
    std::vector<int> input_dims_;
    std::vector<int> output_dims_;
    std::vector<int> input_offsets_;
    std::vector<int> output_offsets_;
    int n_ = 0;
    int m_ = 0;
};

/// Axis-aligned box, the product of per-coordinate intervals.
class BoxSet {
public:
    BoxSet() = default;
    BoxSet(VectorXd lower, VectorXd upper);

    static BoxSet cube(int n, double lo, double hi);

    const VectorXd& lower() const { return lower_; }
    const VectorXd& upper() const { return upper_; }
    int dim() const { return static_cast<int>(lower_.size()); }

    bool contains(const VectorXd& v, double tol = 0.0) const;

    /// Restriction to agent i's coordinates (X_i).
    BoxSet block(const BlockLayout& layout, int i) const;

private:
    VectorXd lower_;
    VectorXd upper_;
};

/// Dense output map C with cached column blocks C_i, row blocks C_{i*} and
/// spectral norm.
class OutputMap {
public:
    OutputMap() = default;
    OutputMap(MatrixXd entries, const BlockLayout& layout);

    const MatrixXd& matrix() const { return c_; }
    const MatrixXd& column_block(int i) const { return cols_.at(static_cast<std::size_t>(i)); }
    const MatrixXd& row_block(int i) const { return rows_.at(static_cast<std::size_t>(i)); }
    double norm() const { return norm_; }

private:
    MatrixXd c_;
    std::vector<MatrixXd> cols_;
    std::vector<MatrixXd> rows_;
    double norm_ = 0.0;
};

/// Euclidean projection onto a box: componentwise clamp.
VectorXd project_box(const VectorXd& v, const BoxSet& set);

/// Largest singular value.
double spectral_norm(const MatrixXd& m);

/// Length of the corner-to-corner vector, ‖upper − lower‖.
double diameter(const BoxSet& set);

/// Per-block projection hook. A user-supplied projector must return the
/// Euclidean projection of `v` onto agent `i`'s set, i.e. satisfy
/// (z − v)ᵀ(z − w) ≤ 0 for every w in the set.
using BlockProjector = std::function<VectorXd(int agent, const VectorXd& v)>;

/// Default projector: clamp onto the agent's coordinates of `set`.
BlockProjector box_projector(const BoxSet& set, const BlockLayout& layout);

}  // namespace afo

#endif  // AFO_CORE_HPP
