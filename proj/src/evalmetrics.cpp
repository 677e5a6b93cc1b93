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

#include "sonarfield/evalmetrics.hpp"

#include "sonarfield/parallel.hpp"
#include "sonarfield/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sonarfield {

PointCloud to_point_cloud(const HeightField& dev, const BasePlane& plane, const SonarConfig& cfg) {
    const auto rows = static_cast<std::size_t>(cfg.padded_rows());
    const auto cols = static_cast<std::size_t>(cfg.n_az);
    if (dev.psi.rows() != rows || dev.psi.cols() != cols)
        throw DimensionError("height field is " + std::to_string(dev.psi.rows()) + "x" +
                             std::to_string(dev.psi.cols()) + ", config expects " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    const auto profile = plane_elevation_profile(plane, cfg);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(cfg.n_bins) * cols);
    for (std::size_t p = static_cast<std::size_t>(cfg.near_pad); p < rows; ++p) {
        const double r = cfg.cell_range(static_cast<int>(p));
        for (std::size_t j = 0; j < cols; ++j) {
            const double theta = cfg.beam_azimuth(static_cast<int>(j));
            const Vec3 base = surface_point(r, theta, profile[p]);
            const Vec3 tangent = surface_point_dphi(r, theta, profile[p]);
            const Vec3 dir = (1.0 / norm(tangent)) * tangent;
            cloud.points.push_back(base + (r * dev.psi(p, j)) * dir);
        }
    }
    return cloud;
}

namespace {

double dist2(Vec3 a, Vec3 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

double coord(Vec3 v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

// Balanced 3-d tree over indices into a point array.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& pts) : pts_(pts), order_(pts.size()), axis_(pts.size()) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        build(0, order_.size(), 0);
    }

    double nearest_d2(Vec3 q) const {
        double best = std::numeric_limits<double>::infinity();
        search(0, order_.size(), q, best);
        return best;
    }

private:
    void build(std::size_t lo, std::size_t hi, int depth) {
        if (hi - lo <= 1) {
            if (hi > lo) axis_[lo] = depth % 3;
            return;
        }
        const int axis = depth % 3;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             const double ca = coord(pts_[a], axis);
                             const double cb = coord(pts_[b], axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        axis_[mid] = axis;
        build(lo, mid, depth + 1);
        build(mid + 1, hi, depth + 1);
    }

    void search(std::size_t lo, std::size_t hi, Vec3 q, double& best) const {
        if (lo >= hi) return;
        const std::size_t mid = lo + (hi - lo) / 2;
        const Vec3 node = pts_[order_[mid]];
        best = std::min(best, dist2(q, node));
        if (hi - lo == 1) return;
        const int axis = axis_[mid];
        const double diff = coord(q, axis) - coord(node, axis);
        const bool left_first = diff < 0.0;
        if (left_first) search(lo, mid, q, best);
        else search(mid + 1, hi, q, best);
        // A squared axis gap never exceeds the full squared distance, even rounded.
        if (diff * diff <= best) {
            if (left_first) search(mid + 1, hi, q, best);
            else search(lo, mid, q, best);
        }
    }

    const std::vector<Vec3>& pts_;
    std::vector<std::size_t> order_;
    std::vector<int> axis_;
};

void require_nonempty(const PointCloud& a, const PointCloud& b) {
    if (a.points.empty() || b.points.empty()) throw Error(ErrorCode::Invalid, "chamfer of an empty point cloud");
}

double mean_sqrt(const std::vector<double>& d2) {
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    return sum / static_cast<double>(d2.size());
}

} // namespace

double directed_mean_nn(const PointCloud& from, const PointCloud& to) {
    require_nonempty(from, to);
    const KdTree tree(to.points);
    std::vector<double> best(from.points.size());
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (best.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(best.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) best[i] = tree.nearest_d2(from.points[i]);
    });
    return mean_sqrt(best);
}

double chamfer(const PointCloud& a, const PointCloud& b) {
    return 0.5 * (directed_mean_nn(a, b) + directed_mean_nn(b, a));
}

double chamfer_bruteforce(const PointCloud& a, const PointCloud& b) {
    require_nonempty(a, b);
    auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        std::vector<double> best(from.size(), std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < from.size(); ++i)
            for (const Vec3& q : to) best[i] = std::min(best[i], dist2(from[i], q));
        return mean_sqrt(best);
    };
    return 0.5 * (directed(a.points, b.points) + directed(b.points, a.points));
}

HeightErrors height_errors(const PointCloud& pred, const PointCloud& gt) {
    if (pred.points.size() != gt.points.size())
        throw DimensionError("point clouds differ in length: " + std::to_string(pred.points.size()) + " vs " +
                             std::to_string(gt.points.size()));
    HeightErrors out;
    if (pred.points.empty()) return out;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < pred.points.size(); ++k) {
        const double e2 = dist2(pred.points[k], gt.points[k]);
        sum += std::sqrt(e2);
        sum_sq += e2;
    }
    const double n = static_cast<double>(pred.points.size());
    out.mae = sum / n;
    out.mse = sum_sq / n;
    out.rmse = std::sqrt(out.mse);
    return out;
}

MetricsReport evaluate(const HeightField& pred, const HeightField& gt, const BasePlane& plane,
                       const SonarConfig& cfg) {
    const PointCloud a = to_point_cloud(pred, plane, cfg);
    const PointCloud b = to_point_cloud(gt, plane, cfg);
    const HeightErrors e = height_errors(a, b);
    MetricsReport r;
    r.mcd = chamfer(a, b);
    r.rmse = e.rmse;
    r.mae = e.mae;
    r.mse = e.mse;
    r.n_points = a.points.size();
    return r;
}

MetricsReport average_reports(const std::vector<MetricsReport>& reports) {
    MetricsReport out;
    if (reports.empty()) return out;
    for (const auto& r : reports) {
        out.mcd += r.mcd;
        out.rmse += r.rmse;
        out.mae += r.mae;
        out.mse += r.mse;
        out.n_points += r.n_points;
    }
    const double n = static_cast<double>(reports.size());
    out.mcd /= n;
    out.rmse /= n;
    out.mae /= n;
    out.mse /= n;
    return out;
}

} // namespace sonarfield
