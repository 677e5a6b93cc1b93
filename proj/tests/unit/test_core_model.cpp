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

#include "sonarfield/config.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sonarfield;
using sftest::make_config;

namespace {

RawSonarConfig typical_raw() {
    RawSonarConfig raw;
    raw.r_min = 1.5;
    raw.r_max = 7.5;
    raw.n_bins = 512;
    raw.n_az = 48;
    raw.azimuth_spread = deg_to_rad(28.8);
    raw.elev_min = deg_to_rad(-32.0);
    raw.elev_max = deg_to_rad(-18.0);
    return raw;
}

bool has_issue(const ConfigError& e, const std::string& field) {
    for (const auto& i : e.issues())
        if (i.field == field) return true;
    return false;
}

} // namespace

TEST(Config, TypicalSensorIsValid) {
    const SonarConfig cfg = validate_config(typical_raw());
    EXPECT_EQ(cfg.n_bins, 512);
    EXPECT_EQ(cfg.n_el, 6 * 512);
    EXPECT_DOUBLE_EQ(cfg.bin_width(), 6.0 / 512);
    EXPECT_EQ(cfg.near_pad, 4);
    EXPECT_EQ(cfg.padded_rows(), 516);
}

TEST(Config, RayCountDefaultsToSixPerBin) {
    RawSonarConfig raw = typical_raw();
    raw.n_bins = 300;
    EXPECT_EQ(validate_config(raw).n_el, 1800);
}

TEST(Config, DegenerateRangeNamesField) {
    RawSonarConfig raw = typical_raw();
    raw.r_max = raw.r_min;
    try {
        validate_config(raw);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        ASSERT_TRUE(has_issue(e, "r_max"));
        for (const auto& i : e.issues())
            if (i.field == "r_max") { EXPECT_EQ(i.reason, "must exceed r_min"); }
    }
}

TEST(Config, AllIssuesReportedTogether) {
    RawSonarConfig raw = typical_raw();
    raw.n_bins = 1;
    raw.alpha = -1.0;
    raw.gamma = 0.5;
    raw.elev_max = 0.1;
    try {
        validate_config(raw);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_TRUE(has_issue(e, "n_bins"));
        EXPECT_TRUE(has_issue(e, "alpha"));
        EXPECT_TRUE(has_issue(e, "gamma"));
        EXPECT_TRUE(has_issue(e, "elev_max"));
        EXPECT_GE(e.issues().size(), 4u);
    }
}

TEST(Config, MissingRequiredFieldsRejected) {
    EXPECT_THROW(validate_config(RawSonarConfig{}), ConfigError);
}

TEST(Config, ValidationIsIdempotent) {
    const SonarConfig once = validate_config(typical_raw());
    const SonarConfig twice = validate_config(to_raw(once));
    EXPECT_EQ(once, twice);
}

TEST(Config, DegreeRoundTripIsExact) {
    for (double rad : {-0.5235987755982988, -0.31, 0.123456789, 1e-3})
        EXPECT_EQ(deg_to_rad(rad_to_deg(rad)), rad);
}

TEST(Plane, ZeroTiltIsConstant) {
    const SonarConfig cfg = make_config();
    const double phi = -0.4;
    const auto prof = plane_elevation_profile({phi, phi}, cfg);
    ASSERT_EQ(prof.size(), static_cast<std::size_t>(cfg.padded_rows()));
    // equal anchors put the line through the sensor, so every arc meets it at phi
    for (double v : prof) EXPECT_NEAR(v, phi, 1e-12);
}

TEST(Plane, AnchorsMapBack) {
    const SonarConfig cfg = make_config();
    for (auto pl : {BasePlane{-0.55, -0.3}, BasePlane{-0.3, -0.55}, BasePlane{-0.6, -0.27}}) {
        EXPECT_NEAR(plane_elevation_at(pl, cfg, cfg.r_min), pl.phi_near, 1e-12);
        EXPECT_NEAR(plane_elevation_at(pl, cfg, cfg.r_max), pl.phi_far, 1e-12);
    }
}

TEST(Plane, FullFanCoverage) {
    const SonarConfig cfg = make_config();
    EXPECT_DOUBLE_EQ(coverage({cfg.elev_min, cfg.elev_max}, cfg), 1.0);
    EXPECT_DOUBLE_EQ(coverage({cfg.elev_max, cfg.elev_min}, cfg), 1.0);
}

TEST(Plane, ProfileMatchesLineArcOracle) {
    const SonarConfig cfg = make_config();
    const BasePlane pl = sftest::mid_plane(cfg);
    const auto prof = plane_elevation_profile(pl, cfg);
    for (int p = 0; p < cfg.padded_rows(); ++p) {
        const auto want = sftest::ref::plane_elevation(pl, cfg, sftest::ref::cell_range(cfg, p));
        EXPECT_NEAR(prof[static_cast<std::size_t>(p)], static_cast<double>(want), 1e-12) << "row " << p;
    }
}

TEST(Plane, ProfileIsMonotoneBetweenAnchors) {
    const SonarConfig cfg = make_config();
    const BasePlane pl = sftest::mid_plane(cfg);
    const auto prof = plane_elevation_profile(pl, cfg);
    for (int p = cfg.near_pad + 1; p < cfg.padded_rows(); ++p)
        EXPECT_GE(prof[static_cast<std::size_t>(p)], prof[static_cast<std::size_t>(p - 1)]);
}

TEST(Plane, OutsideFanRejected) {
    const SonarConfig cfg = make_config();
    EXPECT_THROW(check_plane({cfg.elev_min - 0.01, cfg.elev_max}, cfg), Error);
    EXPECT_NO_THROW(check_plane({cfg.elev_min, cfg.elev_max}, cfg));
}

TEST(Settings, DefaultsAndChecks) {
    const OptimSettings s;
    EXPECT_EQ(s.steps, 150);
    EXPECT_DOUBLE_EQ(s.lr_geometry, 1e-4);
    EXPECT_DOUBLE_EQ(s.lr_gains, 0.1);
    EXPECT_EQ(s.warmup, 30);
    EXPECT_DOUBLE_EQ(s.lambda_tv, 0.1);
    EXPECT_DOUBLE_EQ(s.gv_min_coverage, 0.60);
    EXPECT_DOUBLE_EQ(s.gv_max_coverage, 0.975);
    EXPECT_DOUBLE_EQ(s.ht_coverage, 0.90);
    EXPECT_NO_THROW(check_settings(s));

    OptimSettings bad = s;
    bad.gv_min_coverage = 0.9;
    bad.gv_max_coverage = 0.8;
    EXPECT_THROW(check_settings(bad), Error);
    bad = s;
    bad.gv_min_coverage = 0.0;
    EXPECT_THROW(check_settings(bad), Error);
}

TEST(PlaneMode, ParseRoundTrip) {
    for (auto m : {PlaneMode::KnownPlane, PlaneMode::HighTilt, PlaneMode::GenericView})
        EXPECT_EQ(parse_plane_mode(to_string(m)), m);
    EXPECT_THROW(parse_plane_mode("sideways"), Error);
}
