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

#include "sonarfield/terrain.hpp"

#include "sonarfield/io.hpp"
#include "sonarfield/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace sonarfield {

namespace {

// Ken Perlin's reference permutation.
constexpr std::array<std::uint8_t, 256> kPerm = {
    151, 160, 137, 91,  90,  15,  131, 13,  201, 95,  96,  53,  194, 233, 7,   225, 140, 36,  103, 30,  69,  142,
    8,   99,  37,  240, 21,  10,  23,  190, 6,   148, 247, 120, 234, 75,  0,   26,  197, 62,  94,  252, 219, 203,
    117, 35,  11,  32,  57,  177, 33,  88,  237, 149, 56,  87,  174, 20,  125, 136, 171, 168, 68,  175, 74,  165,
    71,  134, 139, 48,  27,  166, 77,  146, 158, 231, 83,  111, 229, 122, 60,  211, 133, 230, 220, 105, 92,  41,
    55,  46,  245, 40,  244, 102, 143, 54,  65,  25,  63,  161, 1,   216, 80,  73,  209, 76,  132, 187, 208, 89,
    18,  169, 200, 196, 135, 130, 116, 188, 159, 86,  164, 100, 109, 198, 173, 186, 3,   64,  52,  217, 226, 250,
    124, 123, 5,   202, 38,  147, 118, 126, 255, 82,  85,  212, 207, 206, 59,  227, 47,  16,  58,  17,  182, 189,
    28,  42,  223, 183, 170, 213, 119, 248, 152, 2,   44,  154, 163, 70,  221, 153, 101, 155, 167, 43,  172, 9,
    129, 22,  39,  253, 19,  98,  108, 110, 79,  113, 224, 232, 178, 185, 112, 104, 218, 246, 97,  228, 251, 34,
    242, 193, 238, 210, 144, 12,  191, 179, 162, 241, 81,  51,  145, 235, 249, 14,  239, 107, 49,  192, 214, 31,
    181, 199, 106, 157, 184, 84,  204, 176, 115, 121, 50,  45,  127, 4,   150, 254, 138, 236, 205, 93,  222, 114,
    67,  29,  24,  72,  243, 141, 128, 195, 78,  66,  215, 61,  156, 180};

constexpr double kDiag = 0.70710678118654752440;
constexpr std::array<std::array<double, 2>, 8> kGradients = {{
    {1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0},
    {kDiag, kDiag}, {-kDiag, kDiag}, {kDiag, -kDiag}, {-kDiag, -kDiag},
}};

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lerp(double a, double b, double t) { return a + t * (b - a); }

} // namespace

double perlin2(double x, double y, double frequency, std::uint64_t seed) {
    const std::uint64_t mix = splitmix64(seed);
    const std::uint64_t ox = mix & 0xffu;
    const std::uint64_t oy = (mix >> 8) & 0xffu;
    const std::uint64_t gsel = (mix >> 16) & 0x7u;

    const double X = x * frequency;
    const double Y = y * frequency;
    const double xf = std::floor(X);
    const double yf = std::floor(Y);
    const double fx = X - xf;
    const double fy = Y - yf;
    const auto xi = static_cast<std::uint64_t>(static_cast<long long>(xf));
    const auto yi = static_cast<std::uint64_t>(static_cast<long long>(yf));

    auto corner = [&](std::uint64_t cx, std::uint64_t cy, double dx, double dy) {
        const std::uint8_t h = kPerm[(kPerm[(cx + ox) & 0xffu] + cy + oy) & 0xffu];
        const auto& g = kGradients[(h ^ gsel) & 0x7u];
        return g[0] * dx + g[1] * dy;
    };

    const double n00 = corner(xi, yi, fx, fy);
    const double n10 = corner(xi + 1, yi, fx - 1.0, fy);
    const double n01 = corner(xi, yi + 1, fx, fy - 1.0);
    const double n11 = corner(xi + 1, yi + 1, fx - 1.0, fy - 1.0);
    const double u = fade(fx);
    const double v = fade(fy);
    return lerp(lerp(n00, n10, u), lerp(n01, n11, u), v);
}

Grid seafloor_offsets(const SonarConfig& cfg, const BasePlane& plane, double amplitude, double frequency,
                      std::uint64_t seed, int octaves) {
    if (!(amplitude > 0.0)) throw Error(ErrorCode::Invalid, "amplitude must be positive");
    if (!(frequency > 0.0)) throw Error(ErrorCode::Invalid, "frequency must be positive");
    if (octaves < 1 || octaves > 2) throw Error(ErrorCode::Invalid, "octaves must be 1 or 2");

    const auto rows = static_cast<std::size_t>(cfg.padded_rows());
    const auto cols = static_cast<std::size_t>(cfg.n_az);
    const auto profile = plane_elevation_profile(plane, cfg);
    const std::uint64_t seed2 = splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL);

    Grid noise(rows, cols);
    for (std::size_t p = 0; p < rows; ++p) {
        const double rho = cfg.cell_range(static_cast<int>(p)) * std::cos(profile[p]);
        for (std::size_t j = 0; j < cols; ++j) {
            const double theta = cfg.beam_azimuth(static_cast<int>(j));
            const double x = rho * std::cos(theta);
            const double y = rho * std::sin(theta);
            double v = perlin2(x, y, frequency, seed);
            if (octaves == 2) v += perlin2(x, y, 2.0 * frequency, seed2);
            noise(p, j) = v;
        }
    }

    const auto first = static_cast<std::size_t>(cfg.near_pad);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t p = first; p < rows; ++p)
        for (std::size_t j = 0; j < cols; ++j) {
            lo = std::min(lo, noise(p, j));
            hi = std::max(hi, noise(p, j));
        }
    if (!(hi - lo > 1e-12))
        throw Error(ErrorCode::Invalid, "noise patch is constant over the grid; choose a different seed or frequency");

    const double scale = amplitude / (hi - lo);
    Grid dz(rows, cols);
    double sum = 0.0;
    for (std::size_t p = first; p < rows; ++p)
        for (std::size_t j = 0; j < cols; ++j) sum += (noise(p, j) - lo) * scale;
    const double mean = sum / static_cast<double>((rows - first) * cols);
    for (std::size_t p = 0; p < rows; ++p)
        for (std::size_t j = 0; j < cols; ++j) dz(p, j) = (noise(p, j) - lo) * scale - mean;
    return dz;
}

HeightField offsets_to_heightfield(const Grid& dz, const BasePlane& plane, const SonarConfig& cfg) {
    const auto profile = plane_elevation_profile(plane, cfg);
    HeightField hf = zero_heightfield(cfg);
    if (!dz.same_shape(hf.psi)) throw DimensionError("offset grid does not match the padded config grid");
    for (std::size_t p = 0; p < dz.rows(); ++p) {
        const double r = cfg.cell_range(static_cast<int>(p));
        const double z = r * std::sin(profile[p]);
        for (std::size_t j = 0; j < dz.cols(); ++j) {
            const double s = std::clamp((z + dz(p, j)) / r, -1.0, 1.0);
            hf.psi(p, j) = std::asin(s) - profile[p];
        }
    }
    return hf;
}

HeightField synth_seafloor(const SonarConfig& cfg, const BasePlane& plane, double amplitude, double frequency,
                           std::uint64_t seed, int octaves) {
    return offsets_to_heightfield(seafloor_offsets(cfg, plane, amplitude, frequency, seed, octaves), plane, cfg);
}

ScenePreset in_dist_preset() {
    ScenePreset p;
    p.name = "in_dist";
    p.azimuth_spread_deg = {10.0, 19.0};
    p.start_range = {1.53, 4.97};
    p.end_range = {3.80, 7.50};
    p.range_coverage = {2.03, 5.49};
    p.n_bins = {380, 512};
    p.n_az = {36, 64};
    p.elevation_spread_deg = {10.0, 19.0};
    p.fan_pitch_deg = {-35.0, -15.0};
    p.amplitude = {0.0201, 0.0998};
    p.frequency = {2.0, 15.0};
    p.tilt_deg = {6.87, 38.0};
    return p;
}

ScenePreset holo_standard_like_preset() {
    ScenePreset p;
    p.name = "holo_standard_like";
    p.azimuth_spread_deg = {10.0, 29.0};
    p.start_range = {1.01, 5.99};
    p.end_range = {4.16, 8.50};
    p.range_coverage = {2.51, 5.50};
    p.n_bins = {512, 512};
    p.n_az = {48, 48};
    p.elevation_spread_deg = {10.0, 29.0};
    p.fan_pitch_deg = {-35.0, -15.0};
    p.amplitude = {0.0103, 0.0797};
    p.frequency = {1.0, 4.0};
    p.tilt_deg = {6.59, 47.23};
    return p;
}

ScenePreset holo_rough_like_preset() {
    ScenePreset p;
    p.name = "holo_rough_like";
    p.azimuth_spread_deg = {10.0, 29.0};
    p.start_range = {5.14, 7.98};
    p.end_range = {8.56, 12.62};
    p.range_coverage = {3.12, 4.97};
    p.n_bins = {512, 512};
    p.n_az = {48, 48};
    p.elevation_spread_deg = {11.0, 28.0};
    p.fan_pitch_deg = {-35.0, -15.0};
    p.amplitude = {0.100, 0.159};
    p.frequency = {1.0, 3.5};
    p.tilt_deg = {14.4, 51.1};
    return p;
}

std::vector<std::string> preset_names() { return {"in_dist", "holo_standard_like", "holo_rough_like"}; }

ScenePreset preset_by_name(const std::string& name) {
    if (name == "in_dist") return in_dist_preset();
    if (name == "holo_standard_like") return holo_standard_like_preset();
    if (name == "holo_rough_like") return holo_rough_like_preset();
    throw Error(ErrorCode::Invalid,
                "unknown preset '" + name + "' (expected in_dist, holo_standard_like or holo_rough_like)");
}

SceneDraw draw_scene(const ScenePreset& preset, Rng& rng) {
    auto draw = [&](const Interval& iv) { return uniform(rng, iv.lo, iv.hi); };
    auto draw_int = [&](const Interval& iv) {
        return uniform_int(rng, static_cast<int>(iv.lo), static_cast<int>(iv.hi));
    };

    int range_rejects = 0;
    int tilt_rejects = 0;
    for (int attempt = 0; attempt < kMaxSceneAttempts; ++attempt) {
        const double az_spread = draw(preset.azimuth_spread_deg);
        const double r_min = draw(preset.start_range);
        const Interval cov{std::max(preset.range_coverage.lo, preset.end_range.lo - r_min),
                           std::min(preset.range_coverage.hi, preset.end_range.hi - r_min)};
        const double cov_u = uniform01(rng);
        const int n_bins = draw_int(preset.n_bins);
        const int n_az = draw_int(preset.n_az);
        const double el_spread = draw(preset.elevation_spread_deg);
        const double pitch = draw(preset.fan_pitch_deg);
        const double u_near = uniform01(rng);
        const double u_far = uniform01(rng);
        const double amplitude = draw(preset.amplitude);
        const double frequency = draw(preset.frequency);
        const std::uint64_t noise_seed = rng();

        if (cov.lo > cov.hi) {
            ++range_rejects;
            continue;
        }
        const double r_max = r_min + cov.lo + cov_u * (cov.hi - cov.lo);

        RawSonarConfig raw;
        raw.r_min = r_min;
        raw.r_max = r_max;
        raw.n_bins = n_bins;
        raw.n_az = n_az;
        raw.azimuth_spread = deg_to_rad(az_spread);
        raw.elev_min = deg_to_rad(pitch - 0.5 * el_spread);
        raw.elev_max = deg_to_rad(pitch + 0.5 * el_spread);
        const SonarConfig cfg = validate_config(raw);

        const double margin = kAnchorMargin * cfg.elevation_span();
        const double a_lo = cfg.elev_min + margin;
        const double a_hi = cfg.elev_max - margin;
        double phi_a = a_lo + u_near * (a_hi - a_lo);
        double phi_b = a_lo + u_far * (a_hi - a_lo);
        if (phi_a > phi_b) std::swap(phi_a, phi_b);
        const BasePlane plane{phi_a, phi_b};
        if (!(phi_b > phi_a)) {
            ++tilt_rejects;
            continue;
        }
        const double tilt = plane_tilt(plane, cfg) * 180.0 / kPi;
        if (!preset.tilt_deg.contains(tilt)) {
            ++tilt_rejects;
            continue;
        }

        SceneDraw d;
        d.cfg = cfg;
        d.plane = plane;
        d.amplitude = amplitude;
        d.frequency = frequency;
        d.noise_seed = noise_seed;
        d.draws = {
            {"azimuth_spread_deg", az_spread},
            {"r_min", r_min},
            {"r_max", r_max},
            {"range_coverage", r_max - r_min},
            {"n_bins", static_cast<double>(n_bins)},
            {"n_az", static_cast<double>(n_az)},
            {"elevation_spread_deg", el_spread},
            {"fan_pitch_deg", pitch},
            {"phi_near_deg", rad_to_deg(plane.phi_near)},
            {"phi_far_deg", rad_to_deg(plane.phi_far)},
            {"tilt_deg", tilt},
            {"amplitude", amplitude},
            {"frequency", frequency},
        };
        return d;
    }
    throw Error(ErrorCode::Invalid, "preset '" + preset.name + "': no feasible scene after " +
                                        std::to_string(kMaxSceneAttempts) + " attempts (" +
                                        std::to_string(range_rejects) + " empty range-coverage windows, " +
                                        std::to_string(tilt_rejects) + " planes outside the tilt range)");
}

SceneSample sample_scene(const ScenePreset& preset, Rng& rng, int octaves) {
    SceneDraw d = draw_scene(preset, rng);
    SceneSample s;
    s.cfg = d.cfg;
    s.plane = d.plane;
    s.gt_dev = synth_seafloor(d.cfg, d.plane, d.amplitude, d.frequency, d.noise_seed, octaves);
    // grids are stored as f32; rendering from the stored values keeps the
    // written target reproducible from the written ground truth
    for (double& v : s.gt_dev.psi.values()) v = static_cast<double>(static_cast<float>(v));
    s.target = render(s.gt_dev, s.plane, unit_gains(s.cfg), s.cfg);
    s.draws = std::move(d.draws);
    s.draws.emplace_back("octaves", static_cast<double>(octaves));
    return s;
}

SceneSample sample_scene(const ScenePreset& preset, std::uint64_t seed, int octaves) {
    Rng rng(seed);
    SceneSample s = sample_scene(preset, rng, octaves);
    s.seed = seed;
    return s;
}

std::vector<DatasetEntry> gen_dataset(const ScenePreset& preset, int n, std::uint64_t seed,
                                      const std::string& out_dir, int octaves) {
    namespace fs = std::filesystem;
    if (n < 0) throw Error(ErrorCode::Invalid, "sample count must be non-negative");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create '" + out_dir + "': " + ec.message());

    std::vector<DatasetEntry> entries;
    entries.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "sample_%04d", i);
        const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        const SceneSample s = sample_scene(preset, sample_seed, octaves);

        DatasetEntry e;
        e.id = id;
        e.seed = sample_seed;
        e.cfg_path = e.id + "/config.json";
        e.plane_path = e.id + "/plane.json";
        e.gt_path = e.id + "/gt.sfg";
        e.target_path = e.id + "/target.sfg";
        e.draws = s.draws;

        const fs::path root(out_dir);
        fs::create_directories(root / e.id, ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create '" + (root / e.id).string() + "': " + ec.message());
        save_config((root / e.cfg_path).string(), s.cfg);
        save_plane((root / e.plane_path).string(), s.plane);
        write_sfg((root / e.gt_path).string(), s.gt_dev.psi, SfgKind::HeightField);
        write_sfg((root / e.target_path).string(), s.target.intensity, SfgKind::Image);
        entries.push_back(std::move(e));
    }
    save_manifest((fs::path(out_dir) / "manifest.json").string(), entries);
    return entries;
}

} // namespace sonarfield
