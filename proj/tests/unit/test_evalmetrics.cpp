// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "fixtures.hpp"
#include "reference.hpp"

#include "sonarfield/evalmetrics.hpp"
#include "sonarfield/parallel.hpp"
#include "sonarfield/terrain.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sonarfield;
using sftest::make_config;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double spread) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i)
        c.points.push_back({uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, -spread, spread)});
    return c;
}

PointCloud shifted(const PointCloud& c, Vec3 d) {
    PointCloud out = c;
    for (auto& p : out.points) p = p + d;
    return out;
}

} // namespace

TEST(PointCloud, ZeroDeviationLiesOnPlane) {
    const SonarConfig cfg = make_config({});
    const BasePlane pl = sftest::mid_plane(cfg);
    const PointCloud c = to_point_cloud(zero_heightfield(cfg), pl, cfg);
    ASSERT_EQ(c.points.size(), static_cast<std::size_t>(cfg.n_bins * cfg.n_az));
    std::size_t i = 0;
    for (int k = 0; k < cfg.n_bins; ++k) {
        const double r = cfg.bin_range(k);
        const auto el = sftest::ref::plane_elevation(pl, cfg, r);
        for (int j = 0; j < cfg.n_az; ++j, ++i) {
            const auto want = sftest::ref::embed(r, cfg.beam_azimuth(j), el);
            EXPECT_NEAR(c.points[i].x, static_cast<double>(want.x), 1e-12);
            EXPECT_NEAR(c.points[i].y, static_cast<double>(want.y), 1e-12);
            EXPECT_NEAR(c.points[i].z, static_cast<double>(want.z), 1e-12);
        }
    }
}

TEST(PointCloud, HundredthRadianAtFiveMeters) {
    // a single visible bin centered on 5 m
    const SonarConfig cfg = make_config({.n_bins = 2, .n_az = 4, .r_min = 4.95, .r_max = 5.15});
    ASSERT_DOUBLE_EQ(cfg.bin_range(0), 5.0);
    const BasePlane pl = sftest::mid_plane(cfg);
    HeightField hf = zero_heightfield(cfg);
    for (double& v : hf.psi.values()) v = 0.01;
    const PointCloud base = to_point_cloud(zero_heightfield(cfg), pl, cfg);
    const PointCloud moved = to_point_cloud(hf, pl, cfg);
    for (int j = 0; j < cfg.n_az; ++j) EXPECT_NEAR(norm(moved.points[j] - base.points[j]), 0.05, 1e-12);
}

TEST(PointCloud, CloseToSphericalEmbedding) {
    // offsets follow the arc tangent; the true arc point is within r*psi^2/2
    const SonarConfig cfg = make_config({.n_bins = 40, .n_az = 10});
    const BasePlane pl = sftest::mid_plane(cfg);
    Rng rng(8);
    const HeightField hf = sftest::random_field(cfg, rng, 0.02);
    const PointCloud c = to_point_cloud(hf, pl, cfg);
    std::size_t i = 0;
    for (int k = 0; k < cfg.n_bins; ++k) {
        const double r = cfg.bin_range(k);
        const auto el = sftest::ref::plane_elevation(pl, cfg, r);
        for (int j = 0; j < cfg.n_az; ++j, ++i) {
            const double psi = hf.psi(static_cast<std::size_t>(k + cfg.near_pad), static_cast<std::size_t>(j));
            const auto s = sftest::ref::embed(r, cfg.beam_azimuth(j), el + psi);
            const Vec3 exact{static_cast<double>(s.x), static_cast<double>(s.y), static_cast<double>(s.z)};
            EXPECT_LE(norm(c.points[i] - exact), 0.5 * r * psi * psi + 1e-12);
        }
    }
}

TEST(PointCloud, ShapeMismatch) {
    const SonarConfig cfg = make_config({});
    HeightField hf;
    hf.psi = Grid(3, 3);
    EXPECT_THROW(to_point_cloud(hf, sftest::mid_plane(cfg), cfg), DimensionError);
}

TEST(Chamfer, HandExamples) {
    PointCloud a{{{0, 0, 0}}}, b{{{3, 4, 0}}};
    EXPECT_DOUBLE_EQ(chamfer(a, b), 5.0);
    // A = {0, 1} on x, B = {0}: A->B mean 0.5, B->A 0
    PointCloud two{{{0, 0, 0}, {1, 0, 0}}}, one{{{0, 0, 0}}};
    EXPECT_DOUBLE_EQ(chamfer(two, one), 0.25);
    EXPECT_DOUBLE_EQ(chamfer(two, two), 0.0);
    EXPECT_THROW(chamfer(PointCloud{}, one), Error);
}

TEST(Chamfer, MatchesExhaustiveSearchBitForBit) {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const PointCloud a = random_cloud(rng, 50, 1.0);
        const PointCloud b = random_cloud(rng, 50, 1.0);
        EXPECT_EQ(chamfer(a, b), chamfer_bruteforce(a, b));
    }
    // duplicated and coplanar points stress the tree ties
    PointCloud grid;
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) grid.points.push_back({0.1 * i, 0.1 * j, 0.0});
    grid.points.push_back({0.3, 0.3, 0.0});
    const PointCloud probe = random_cloud(rng, 300, 1.5);
    EXPECT_EQ(chamfer(grid, probe), chamfer_bruteforce(grid, probe));
}

TEST(Chamfer, LargeCloudsAndThreads) {
    Rng rng(5);
    const PointCloud a = random_cloud(rng, 3000, 2.0);
    const PointCloud b = random_cloud(rng, 2500, 2.0);
    const double ref = chamfer_bruteforce(a, b);
    set_num_threads(1);
    const double one = chamfer(a, b);
    set_num_threads(4);
    const double four = chamfer(a, b);
    set_num_threads(0);
    EXPECT_EQ(one, ref);
    EXPECT_EQ(four, ref);
}

TEST(Chamfer, SymmetricAndTranslationInvariant) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const PointCloud a = random_cloud(rng, 40, 1.0);
        const PointCloud b = random_cloud(rng, 60, 1.0);
        EXPECT_EQ(chamfer(a, b), chamfer(b, a));
        const Vec3 d{0.375, -1.25, 2.5};  // exact binary shifts
        EXPECT_NEAR(chamfer(shifted(a, d), shifted(b, d)), chamfer(a, b), 1e-12);
    }
}

TEST(HeightErrors, HandExamples) {
    PointCloud gt{{{0, 0, 0}, {1, 0, 0}}};
    PointCloud pred{{{0, 0, 0.05}, {1, 0, -0.05}}};
    const HeightErrors e = height_errors(pred, gt);
    EXPECT_DOUBLE_EQ(e.mae, 0.05);
    EXPECT_DOUBLE_EQ(e.rmse, 0.05);
    EXPECT_NEAR(e.mse, 0.0025, 1e-18);

    PointCloud p2{{{0, 0, 0}, {1, 0, 0.2}}};
    const HeightErrors f = height_errors(p2, gt);
    EXPECT_DOUBLE_EQ(f.mae, 0.1);
    EXPECT_DOUBLE_EQ(f.mse, 0.02);
    EXPECT_DOUBLE_EQ(f.rmse, std::sqrt(0.02));
    EXPECT_THROW(height_errors(PointCloud{{{0, 0, 0}}}, gt), DimensionError);
}

TEST(HeightErrors, LoopOracle) {
    Rng rng(21);
    const PointCloud a = random_cloud(rng, 500, 1.0);
    const PointCloud b = random_cloud(rng, 500, 1.0);
    long double s = 0, s2 = 0;
    for (std::size_t i = 0; i < 500; ++i) {
        const long double dx = a.points[i].x - b.points[i].x, dy = a.points[i].y - b.points[i].y,
                          dz = a.points[i].z - b.points[i].z;
        const long double d2 = dx * dx + dy * dy + dz * dz;
        s += std::sqrt(d2);
        s2 += d2;
    }
    const HeightErrors e = height_errors(a, b);
    EXPECT_NEAR(e.mae, static_cast<double>(s / 500), 1e-14);
    EXPECT_NEAR(e.mse, static_cast<double>(s2 / 500), 1e-14);
    EXPECT_DOUBLE_EQ(e.rmse * e.rmse, e.mse);
}

TEST(Evaluate, UniformFiveCentimeterOffset) {
    const SonarConfig cfg = make_config({.n_bins = 2, .n_az = 4, .r_min = 4.95, .r_max = 5.15});
    const BasePlane pl = sftest::mid_plane(cfg);
    HeightField pred = zero_heightfield(cfg);
    // 5 cm at the 5 m bin, same arc length in the other
    for (std::size_t p = 0; p < pred.psi.rows(); ++p)
        for (std::size_t j = 0; j < pred.psi.cols(); ++j) pred.psi(p, j) = 0.05 / cfg.cell_range(static_cast<int>(p));
    const MetricsReport r = evaluate(pred, zero_heightfield(cfg), pl, cfg);
    EXPECT_NEAR(r.mae, 0.05, 1e-12);
    EXPECT_NEAR(r.rmse, 0.05, 1e-12);
    EXPECT_NEAR(r.mse, 0.0025, 1e-12);
    EXPECT_EQ(r.n_points, 8u);
    EXPECT_LE(r.mcd, r.mae + 1e-15);
}

TEST(Evaluate, ChamferNeverExceedsMae) {
    // every point's nearest neighbor is at most its paired point
    const SonarConfig cfg = make_config({.n_bins = 48, .n_az = 12});
    const BasePlane pl = sftest::mid_plane(cfg);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const HeightField a = sftest::random_field(cfg, rng, 0.03);
        const HeightField b = sftest::random_field(cfg, rng, 0.03);
        const MetricsReport r = evaluate(a, b, pl, cfg);
        EXPECT_LE(r.mcd, r.mae + 1e-15);
        EXPECT_DOUBLE_EQ(r.rmse * r.rmse, r.mse);
        EXPECT_GE(r.rmse, r.mae);
        EXPECT_EQ(evaluate(b, b, pl, cfg).mae, 0.0);
        EXPECT_EQ(evaluate(b, b, pl, cfg).mcd, 0.0);
    }
}

TEST(Evaluate, AverageReports) {
    MetricsReport a{.mcd = 0.01, .rmse = 0.02, .mae = 0.015, .mse = 0.0004, .n_points = 10};
    MetricsReport b{.mcd = 0.03, .rmse = 0.04, .mae = 0.025, .mse = 0.0016, .n_points = 30};
    const MetricsReport m = average_reports({a, b});
    EXPECT_DOUBLE_EQ(m.mcd, 0.02);
    EXPECT_DOUBLE_EQ(m.rmse, 0.03);
    EXPECT_DOUBLE_EQ(m.mae, 0.02);
    EXPECT_DOUBLE_EQ(m.mse, 0.001);
    EXPECT_EQ(m.n_points, 40u);
    EXPECT_EQ(average_reports({}).n_points, 0u);
}
