#include "afo/core.hpp"
#include "afo/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace afo;

namespace {
VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}
}  // namespace

TEST_CASE("project_box clamps each coordinate") {
    CHECK(project_box(vec({2, -3}), BoxSet::cube(2, -1, 1)) == vec({1, -1}));
    CHECK(project_box(vec({0.3, 0.7}), BoxSet::cube(2, 0, 1)) == vec({0.3, 0.7}));
    CHECK(project_box(vec({0.5, 5}), BoxSet(vec({0, 0}), vec({1, 2}))) == vec({0.5, 2}));
    CHECK_THROWS_AS(project_box(vec({1, 2, 3}), BoxSet::cube(2, 0, 1)), std::invalid_argument);
}

TEST_CASE("projection is idempotent and non-expansive") {
    Rng rng(3);
    const BoxSet set(vec({-1, 0, 2}), vec({1, 0.5, 4}));
    for (int t = 0; t < 200; ++t) {
        VectorXd a(3), b(3);
        for (int d = 0; d < 3; ++d) {
            a[d] = rng.uniform(-6, 6);
            b[d] = rng.uniform(-6, 6);
        }
        const VectorXd pa = project_box(a, set), pb = project_box(b, set);
        CHECK(set.contains(pa));
        CHECK(project_box(pa, set) == pa);
        CHECK((pa - pb).norm() <= (a - b).norm() + 1e-15);
    }
}

TEST_CASE("spectral_norm") {
    CHECK(spectral_norm(MatrixXd::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-14));
    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    CHECK(spectral_norm(d) == doctest::Approx(3.0).epsilon(1e-14));
    MatrixXd nil = MatrixXd::Zero(2, 2);
    nil(0, 1) = 2;
    CHECK(spectral_norm(nil) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(spectral_norm(MatrixXd::Zero(2, 3)) == 0.0);
}

TEST_CASE("diameter") {
    CHECK(diameter(BoxSet::cube(1, -1, 1)) == doctest::Approx(2.0));
    CHECK(diameter(BoxSet::cube(20, -10, 10)) == doctest::Approx(20.0 * std::sqrt(20.0)).epsilon(1e-14));
    CHECK(diameter(BoxSet(vec({1, 2}), vec({1, 2}))) == 0.0);
}

TEST_CASE("box construction rejects inverted bounds") {
    CHECK_THROWS_AS(BoxSet(vec({1}), vec({0})), std::invalid_argument);
    CHECK_THROWS_AS(BoxSet(vec({0, 0}), vec({1})), std::invalid_argument);
}

TEST_CASE("block layout offsets and output map blocks") {
    const BlockLayout layout({2, 1, 3}, {1, 2, 1});
    CHECK(layout.agents() == 3);
    CHECK(layout.n() == 6);
    CHECK(layout.m() == 4);
    CHECK(layout.input_offset(2) == 3);
    CHECK(layout.output_offset(2) == 3);
    CHECK_THROWS_AS(layout.check_agent(3), std::out_of_range);

    MatrixXd C(4, 6);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 6; ++c) C(r, c) = 10 * r + c;
    const OutputMap map(C, layout);
    CHECK(map.column_block(1).cols() == 1);
    CHECK(map.column_block(1)(3, 0) == 32);
    CHECK(map.row_block(1).rows() == 2);
    CHECK(map.row_block(1)(1, 5) == 25);
    CHECK(map.norm() == doctest::Approx(spectral_norm(C)));
    CHECK_THROWS_AS(OutputMap(MatrixXd::Zero(3, 6), layout), std::invalid_argument);

    const BoxSet set = BoxSet::cube(6, -1, 2).block(layout, 2);
    CHECK(set.dim() == 3);
    const auto proj = box_projector(BoxSet::cube(6, -1, 2), layout);
    CHECK(proj(0, vec({5, -5})) == vec({2, -1}));
}

TEST_CASE("substreams are deterministic and distinct") {
    Rng a(11, 2, Stream::compute), b(11, 2, Stream::compute), c(11, 3, Stream::compute), d(11, 2, Stream::measure);
    for (int i = 0; i < 10; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(substream_seed(11, 2, Stream::compute) != substream_seed(11, 3, Stream::compute));
    CHECK(substream_seed(11, 2, Stream::compute) != substream_seed(11, 2, Stream::measure));
    CHECK(c.uniform() != d.uniform());
}
