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

#include "sonarfield/invert.hpp"

#include "sonarfield/render.hpp"

#include <algorithm>
#include <cmath>

namespace sonarfield {

double recon_loss(const Grid& rendered, const Grid& target) {
    if (!rendered.same_shape(target))
        throw DimensionError("recon_loss: rendered " + std::to_string(rendered.rows()) + "x" +
                             std::to_string(rendered.cols()) + " vs target " + std::to_string(target.rows()) +
                             "x" + std::to_string(target.cols()));
    const auto a = rendered.values();
    const auto b = target.values();
    if (a.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

double recon_loss(const SonarImage& rendered, const SonarImage& target) {
    return recon_loss(rendered.intensity, target.intensity);
}

namespace {

double smooth_abs(double x) {
    return std::sqrt(x * x + kTvSmoothing * kTvSmoothing) - kTvSmoothing;
}

double smooth_abs_slope(double x) {
    return x / std::sqrt(x * x + kTvSmoothing * kTvSmoothing);
}

} // namespace

double tv_penalty(const Grid& psi) {
    const std::size_t rows = psi.rows();
    const std::size_t cols = psi.cols();
    if (rows == 0 || cols == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (i + 1 < rows) sum += smooth_abs(psi(i + 1, j) - psi(i, j));
            if (j + 1 < cols) sum += smooth_abs(psi(i, j + 1) - psi(i, j));
        }
    }
    return sum / static_cast<double>(rows * cols);
}

Grid tv_gradient(const Grid& psi) {
    const std::size_t rows = psi.rows();
    const std::size_t cols = psi.cols();
    Grid g(rows, cols);
    if (rows == 0 || cols == 0) return g;
    const double scale = 1.0 / static_cast<double>(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (i + 1 < rows) {
                const double s = scale * smooth_abs_slope(psi(i + 1, j) - psi(i, j));
                g(i + 1, j) += s;
                g(i, j) -= s;
            }
            if (j + 1 < cols) {
                const double s = scale * smooth_abs_slope(psi(i, j + 1) - psi(i, j));
                g(i, j + 1) += s;
                g(i, j) -= s;
            }
        }
    }
    return g;
}

BasePlane sample_plane(PlaneMode mode, const BasePlane& known, const OptimSettings& settings,
                       const SonarConfig& cfg, Rng& rng) {
    const double span = cfg.elevation_span();
    switch (mode) {
        case PlaneMode::KnownPlane:
            return known;
        case PlaneMode::HighTilt: {
            if (settings.ht_coverage > 1.0)
                throw Error(ErrorCode::Invalid, "high-tilt coverage exceeds the elevation fan");
            return BasePlane{cfg.elev_min + (1.0 - settings.ht_coverage) * span, cfg.elev_max};
        }
        case PlaneMode::GenericView: {
            const double c = uniform(rng, settings.gv_min_coverage, settings.gv_max_coverage);
            if (c > 1.0) throw Error(ErrorCode::Invalid, "sampled coverage exceeds the elevation fan");
            const double lower = cfg.elev_min + uniform01(rng) * (1.0 - c) * span;
            return BasePlane{lower, lower + c * span};
        }
    }
    return known;
}

OptimState init_state(const DiffParams& params) {
    OptimState s;
    s.params = params;
    s.m.psi = HeightField{Grid(params.psi.psi.rows(), params.psi.psi.cols())};
    s.m.gains.gains.assign(params.gains.gains.size(), 0.0);
    s.m.tvg_exponent = 0.0;
    s.v = s.m;
    return s;
}

namespace {

struct AdamCoord {
    double bc1;
    double bc2;
    const AdamConstants& k;

    void update(double& p, double& m, double& v, double g, double lr, double wd) const {
        m = k.beta1 * m + (1.0 - k.beta1) * g;
        v = k.beta2 * v + (1.0 - k.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        p *= 1.0 - lr * wd;
        p -= lr * m_hat / (std::sqrt(v_hat) + k.eps);
    }
};

} // namespace

void adamw_step(OptimState& state, const GradBundle& grads, const StepRates& rates, const AdamConstants& k) {
    auto psi = state.params.psi.psi.values();
    auto m_psi = state.m.psi.psi.values();
    auto v_psi = state.v.psi.psi.values();
    const auto g_psi = grads.d_psi.values();
    if (g_psi.size() != psi.size() || grads.d_gains.size() != state.params.gains.gains.size())
        throw DimensionError("adamw_step: gradient shape does not match parameters");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const AdamCoord c{1.0 - std::pow(k.beta1, t), 1.0 - std::pow(k.beta2, t), k};

    for (std::size_t i = 0; i < psi.size(); ++i)
        c.update(psi[i], m_psi[i], v_psi[i], g_psi[i], rates.geometry, rates.weight_decay);
    auto& gains = state.params.gains.gains;
    for (std::size_t j = 0; j < gains.size(); ++j) {
        c.update(gains[j], state.m.gains.gains[j], state.v.gains.gains[j], grads.d_gains[j], rates.gains,
                 rates.weight_decay);
        gains[j] = std::max(gains[j], kMinGain);
    }
    if (grads.d_tvg)
        c.update(state.params.tvg_exponent, state.m.tvg_exponent, state.v.tvg_exponent, *grads.d_tvg, rates.tvg,
                 0.0);
}

FitResult fit(const SonarImage& target, const SonarConfig& cfg, const BasePlane& known_plane,
              const OptimSettings& settings, const FitObserver& observer) {
    check_settings(settings);
    check_plane(known_plane, cfg);
    if (target.intensity.rows() != static_cast<std::size_t>(cfg.n_bins) ||
        target.intensity.cols() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("target image is " + std::to_string(target.intensity.rows()) + "x" +
                             std::to_string(target.intensity.cols()) + ", config expects " +
                             std::to_string(cfg.n_bins) + "x" + std::to_string(cfg.n_az));

    Rng rng(settings.seed);
    OptimState state = init_state(initial_params(cfg));
    FitResult out;
    out.recon_history.reserve(static_cast<std::size_t>(settings.steps));
    state.loss_history.reserve(static_cast<std::size_t>(settings.steps));

    for (int step = 1; step <= settings.steps; ++step) {
        const BasePlane plane = sample_plane(settings.mode, known_plane, settings, cfg, rng);
        GradBundle bundle;
        try {
            bundle = value_and_grad(state.params, plane, target, settings.lambda_tv, cfg, settings.optimize_tvg);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError(e.stage(), step);
        }
        state.loss_history.push_back(bundle.value);
        out.recon_history.push_back(bundle.recon);

        const StepRates rates{settings.lr_geometry, step <= settings.warmup ? 0.0 : settings.lr_gains,
                              settings.lr_tvg, settings.weight_decay};
        adamw_step(state, bundle, rates);
        if (!state.params.psi.psi.all_finite()) throw NonFiniteError("update", step);
        if (observer) observer(step, bundle.value, state.params);
    }

    SonarConfig final_cfg = cfg;
    final_cfg.tvg_exponent = state.params.tvg_exponent;
    out.final_image = render(state.params.psi, known_plane, state.params.gains, final_cfg);
    out.heightfield = std::move(state.params.psi);
    out.gains = std::move(state.params.gains);
    out.tvg_exponent = state.params.tvg_exponent;
    out.loss_history = std::move(state.loss_history);
    out.settings_echo = settings;
    return out;
}

} // namespace sonarfield
