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

// Only the public C header is used here.
#include "sonarfield/sonarfield.h"

#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({"r_min":2,"r_max":6,"n_bins":32,"n_az":8,"n_el":128,"alpha":500,
"azimuth_spread_deg":20,"elev_min_deg":-35,"elev_max_deg":-15})";

const sf_plane kPlane{-32.0 * M_PI / 180.0, -18.0 * M_PI / 180.0};

struct Scratch {
    fs::path path;
    Scratch() {
        static int n = 0;
        path = fs::temp_directory_path() / ("sf_capi_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str(const std::string& leaf) const { return (path / leaf).string(); }
};

sf_config* config() {
    sf_config* c = nullptr;
    EXPECT_EQ(sf_config_from_json(kConfig, &c), SF_OK) << sf_last_error();
    return c;
}

sf_grid* bumpy(const sf_config* c) {
    sf_grid* g = nullptr;
    EXPECT_EQ(sf_grid_create(static_cast<size_t>(sf_config_padded_rows(c)), static_cast<size_t>(sf_config_n_az(c)),
                             SF_GRID_HEIGHTFIELD, &g),
              SF_OK);
    double* d = sf_grid_data(g);
    for (size_t i = 0; i < sf_grid_rows(g) * sf_grid_cols(g); ++i) d[i] = 0.01 * std::sin(0.37 * static_cast<double>(i));
    return g;
}

} // namespace

TEST(CApi, VersionAndStatusNames) {
    EXPECT_GT(std::strlen(sf_version()), 0u);
    EXPECT_STREQ(sf_status_name(SF_OK), "ok");
    EXPECT_NE(std::string(sf_status_name(SF_ERR_FORMAT)), std::string(sf_status_name(SF_ERR_DIMENSION)));
}

TEST(CApi, ConfigAccessorsAndJson) {
    sf_config* c = config();
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(sf_config_n_bins(c), 32);
    EXPECT_EQ(sf_config_n_az(c), 8);
    EXPECT_EQ(sf_config_padded_rows(c), 36);
    char* text = nullptr;
    ASSERT_EQ(sf_config_to_json(c, &text), SF_OK);
    EXPECT_NE(std::string(text).find("\"n_el\": 128"), std::string::npos);
    sf_string_free(text);
    sf_config_free(c);

    sf_config* bad = nullptr;
    EXPECT_EQ(sf_config_from_json("{\"bogus\":1}", &bad), SF_ERR_FORMAT);
    EXPECT_EQ(bad, nullptr);
    EXPECT_NE(std::string(sf_last_error()).find("bogus"), std::string::npos);
    EXPECT_EQ(sf_config_from_json(R"({"r_min":6,"r_max":2,"n_bins":32,"n_az":8,"azimuth_spread_deg":20,)"
                                  R"("elev_min_deg":-35,"elev_max_deg":-15})",
                                  &bad),
              SF_ERR_INVALID);
    EXPECT_EQ(sf_config_from_json(nullptr, &bad), SF_ERR_INVALID);
}

TEST(CApi, RenderAndGridFiles) {
    Scratch dir;
    sf_config* c = config();
    sf_grid* hf = bumpy(c);
    sf_grid* img = nullptr;
    double ms = -1;
    ASSERT_EQ(sf_render(c, hf, &kPlane, nullptr, 0, &img, &ms), SF_OK) << sf_last_error();
    EXPECT_GE(ms, 0.0);
    EXPECT_EQ(sf_grid_rows(img), 32u);
    EXPECT_EQ(sf_grid_cols(img), 8u);
    EXPECT_EQ(sf_grid_kind_of(img), SF_GRID_IMAGE);
    double lo = 1, hi = 0;
    for (size_t i = 0; i < 256; ++i) {
        lo = std::min(lo, sf_grid_cdata(img)[i]);
        hi = std::max(hi, sf_grid_cdata(img)[i]);
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
    EXPECT_GT(hi, 0.0);

    // doubling every gain adds 3 dB, i.e. 0.0301 of the 100 dB window, where unclipped
    std::vector<double> twos(8, 2.0);
    sf_grid* img2 = nullptr;
    ASSERT_EQ(sf_render(c, hf, &kPlane, twos.data(), twos.size(), &img2, nullptr), SF_OK);
    for (size_t i = 0; i < 256; ++i) {
        const double a = sf_grid_cdata(img)[i], b = sf_grid_cdata(img2)[i];
        if (a > 0.01 && b < 0.99) { EXPECT_NEAR(b - a, 0.1 * std::log10(2.0), 1e-12); }
    }
    EXPECT_EQ(sf_render(c, hf, &kPlane, twos.data(), 3, &img2, nullptr), SF_ERR_DIMENSION);

    ASSERT_EQ(sf_grid_write(dir.str("img.sfg").c_str(), img), SF_OK);
    sf_grid* back = nullptr;
    ASSERT_EQ(sf_grid_read(dir.str("img.sfg").c_str(), &back), SF_OK);
    for (size_t i = 0; i < 256; ++i)
        EXPECT_EQ(sf_grid_cdata(back)[i], static_cast<double>(static_cast<float>(sf_grid_cdata(img)[i])));
    EXPECT_EQ(sf_grid_write_pgm(dir.str("img.pgm").c_str(), img, 0), SF_OK);
    EXPECT_TRUE(fs::exists(dir.str("img.pgm")));

    std::ofstream(dir.str("short.sfg"), std::ios::binary) << "SFG1abc";
    sf_grid* none = nullptr;
    EXPECT_EQ(sf_grid_read(dir.str("short.sfg").c_str(), &none), SF_ERR_FORMAT);
    EXPECT_EQ(sf_last_error_offset(), 7);
    EXPECT_EQ(sf_grid_read(dir.str("absent.sfg").c_str(), &none), SF_ERR_IO);

    sf_grid* wrong = nullptr;
    ASSERT_EQ(sf_grid_create(4, 4, SF_GRID_HEIGHTFIELD, &wrong), SF_OK);
    EXPECT_EQ(sf_render(c, wrong, &kPlane, nullptr, 0, &img2, nullptr), SF_ERR_DIMENSION);

    for (sf_grid* g : {hf, img, img2, back, wrong}) sf_grid_free(g);
    sf_grid_free(nullptr);
    sf_config_free(c);
}

TEST(CApi, PlaneAndGainsFiles) {
    Scratch dir;
    ASSERT_EQ(sf_plane_save(dir.str("p.json").c_str(), &kPlane), SF_OK);
    sf_plane p{};
    ASSERT_EQ(sf_plane_load(dir.str("p.json").c_str(), &p), SF_OK);
    EXPECT_NEAR(p.phi_near, kPlane.phi_near, 1e-15);
    EXPECT_NEAR(p.phi_far, kPlane.phi_far, 1e-15);

    std::ofstream(dir.str("g.json")) << "[1.5, 0.5, 2]";
    size_t n = 0;
    ASSERT_EQ(sf_gains_load(dir.str("g.json").c_str(), nullptr, 0, &n), SF_OK);
    EXPECT_EQ(n, 3u);
    double g[3] = {};
    ASSERT_EQ(sf_gains_load(dir.str("g.json").c_str(), g, 3, &n), SF_OK);
    EXPECT_EQ(g[0], 1.5);
    EXPECT_EQ(g[2], 2.0);
}

TEST(CApi, FitEvaluateAndThreads) {
    Scratch dir;
    sf_config* c = config();
    sf_grid* gt = bumpy(c);
    sf_grid* target = nullptr;
    ASSERT_EQ(sf_render(c, gt, &kPlane, nullptr, 0, &target, nullptr), SF_OK);

    sf_fit_settings s = sf_fit_settings_default();
    s.steps = 40;
    s.warmup = 10;
    sf_set_threads(1);
    EXPECT_EQ(sf_threads(), 1);
    sf_fit_result* a = nullptr;
    ASSERT_EQ(sf_fit(c, target, &kPlane, &s, &a), SF_OK) << sf_last_error();
    sf_set_threads(3);
    sf_fit_result* b = nullptr;
    ASSERT_EQ(sf_fit(c, target, &kPlane, &s, &b), SF_OK);
    sf_set_threads(0);

    ASSERT_EQ(sf_fit_result_steps(a), 40u);
    EXPECT_LT(sf_fit_result_recon(a, 39), sf_fit_result_recon(a, 0));
    EXPECT_TRUE(std::isnan(sf_fit_result_loss(a, 40)));
    const sf_grid* ha = sf_fit_result_heightfield(a);
    const sf_grid* hb = sf_fit_result_heightfield(b);
    EXPECT_EQ(0, std::memcmp(sf_grid_cdata(ha), sf_grid_cdata(hb), sizeof(double) * sf_grid_rows(ha) * sf_grid_cols(ha)));
    EXPECT_EQ(sf_fit_result_gains(a, nullptr, 0), 8u);

    ASSERT_EQ(sf_fit_result_write(a, dir.str("out").c_str()), SF_OK);
    EXPECT_TRUE(fs::exists(dir.str("out/loss.csv")));

    sf_metrics m{};
    ASSERT_EQ(sf_evaluate(c, ha, gt, &kPlane, &m), SF_OK);
    EXPECT_EQ(m.n_points, 256u);
    EXPECT_LE(m.mcd_cm, m.mae_cm);
    EXPECT_NEAR(m.rmse_cm * m.rmse_cm, m.mse_cm2, 1e-9);
    char* text = nullptr;
    ASSERT_EQ(sf_metrics_to_json(&m, &text), SF_OK);
    EXPECT_NE(std::string(text).find("mcd_cm"), std::string::npos);
    sf_string_free(text);

    s.lr_geometry = 1e300;
    s.weight_decay = 1e10;
    s.warmup = 0;
    sf_fit_result* div = nullptr;
    EXPECT_EQ(sf_fit(c, target, &kPlane, &s, &div), SF_ERR_DIVERGENCE);
    EXPECT_EQ(div, nullptr);
    EXPECT_NE(std::string(sf_last_error()).find("step"), std::string::npos);

    sf_fit_result_free(a);
    sf_fit_result_free(b);
    sf_grid_free(gt);
    sf_grid_free(target);
    sf_config_free(c);
}

TEST(CApi, GenerateAndBatchEvaluate) {
    Scratch dir;
    ASSERT_EQ(sf_gen_dataset("in_dist", 2, 4, 1, dir.str("data").c_str()), SF_OK) << sf_last_error();
    EXPECT_TRUE(fs::exists(dir.str("data/manifest.json")));
    // ground truth as its own prediction scores zero
    for (const char* id : {"sample_0000", "sample_0001"}) {
        fs::create_directories(dir.path / "pred" / id);
        fs::copy_file(dir.path / "data" / id / "gt.sfg", dir.path / "pred" / id / "heightfield.sfg");
    }
    sf_metrics m{};
    size_t n = 0;
    ASSERT_EQ(sf_eval_manifest(dir.str("data/manifest.json").c_str(), dir.str("pred").c_str(), &m, &n), SF_OK)
        << sf_last_error();
    EXPECT_EQ(n, 2u);
    EXPECT_EQ(m.mae_cm, 0.0);
    EXPECT_EQ(m.mcd_cm, 0.0);
    EXPECT_GT(m.n_points, 0u);
    EXPECT_EQ(sf_gen_dataset("nowhere", 1, 1, 1, dir.str("x").c_str()), SF_ERR_INVALID);
    EXPECT_EQ(sf_gen_dataset("in_dist", 1, 1, 3, dir.str("x").c_str()), SF_ERR_INVALID);
}
