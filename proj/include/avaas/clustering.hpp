#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/microsim.hpp"
#include "avaas/network.hpp"

namespace avaas {

struct LaneFeature {
    LaneId lane;
    double mean_k_vpk = 0.0;
    double mean_v_kmh = 0.0;
    double mean_q_vph = 0.0;
    std::vector<double> z;  // standardized feature vector used for clustering
};

// Whole-horizon average state per lane, over intervals where the lane has
// observations; never-observed lanes are excluded. Features are
// z-standardized over the included lanes (zero-variance dimensions map to 0).
// Default feature space is (mean_k, mean_v); include_flow adds mean_q.
inline std::vector<LaneFeature> lane_features(const std::vector<GroundTruthState>& gt,
                                              bool include_flow = false) {
    std::map<LaneId, std::array<double, 4>> acc;  // k sum, v sum, q sum, count (v over its own count)
    std::map<LaneId, long> v_counts;
    for (const GroundTruthState& g : gt) {
        if (g.vehicle_steps <= 0) continue;
        auto& a = acc[g.lane];
        a[0] += g.k_vpk;
        a[2] += g.q_vph;
        a[3] += 1.0;
        if (g.v_kmh) {
            a[1] += *g.v_kmh;
            ++v_counts[g.lane];
        }
    }
    if (acc.empty()) throw ValidationError("lane_features: no lane has observations");

    std::vector<LaneFeature> out;
    for (const auto& [lane, a] : acc) {
        LaneFeature f;
        f.lane = lane;
        f.mean_k_vpk = a[0] / a[3];
        f.mean_v_kmh = v_counts[lane] > 0 ? a[1] / v_counts[lane] : 0.0;
        f.mean_q_vph = a[2] / a[3];
        out.push_back(f);
    }

    std::size_t dims = include_flow ? 3 : 2;
    auto raw = [&](const LaneFeature& f, std::size_t d) {
        return d == 0 ? f.mean_k_vpk : d == 1 ? f.mean_v_kmh : f.mean_q_vph;
    };
    for (std::size_t d = 0; d < dims; ++d) {
        double mean = 0.0;
        for (const auto& f : out) mean += raw(f, d);
        mean /= out.size();
        double var = 0.0;
        for (const auto& f : out) var += (raw(f, d) - mean) * (raw(f, d) - mean);
        var /= out.size();
        double sd = std::sqrt(var);
        for (auto& f : out) f.z.push_back(sd > 1e-12 ? (raw(f, d) - mean) / sd : 0.0);
    }
    return out;
}

struct ClusterModel {
    int k = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;  // index-aligned with the input features
    double wcss = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline ClusterModel lloyd(const std::vector<std::vector<double>>& points,
                          std::vector<std::vector<double>> centroids, int max_iter, double tol) {
    const std::size_t n = points.size();
    const std::size_t k = centroids.size();
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (std::size_t c = 0; c < k; ++c) {
                double d = sq_dist(points[i], centroids[c]);
                if (d < best) {
                    best = d;
                    assign[i] = static_cast<int>(c);
                }
            }
        }
        std::vector<std::vector<double>> next(k, std::vector<double>(points[0].size(), 0.0));
        std::vector<long> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < points[i].size(); ++d) next[assign[i]][d] += points[i][d];
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed an empty cluster to the point farthest from its centroid
                double worst = -1.0;
                std::size_t far_idx = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = sq_dist(points[i], centroids[assign[i]]);
                    if (d > worst) {
                        worst = d;
                        far_idx = i;
                    }
                }
                next[c] = points[far_idx];
            } else {
                for (double& v : next[c]) v /= counts[c];
            }
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sq_dist(next[c], centroids[c])));
        centroids = std::move(next);
        if (shift < tol && iter > 0) break;
    }
    // final assignment against the converged centroids
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < k; ++c) {
            double d = sq_dist(points[i], centroids[c]);
            if (d < best) {
                best = d;
                assign[i] = static_cast<int>(c);
            }
        }
        wcss += best;
    }
    ClusterModel m;
    m.k = static_cast<int>(k);
    m.centroids = std::move(centroids);
    m.assignment = std::move(assign);
    m.wcss = wcss;
    return m;
}

inline std::vector<std::vector<double>> farthest_point_seeds(const std::vector<std::vector<double>>& points,
                                                             int k, std::uint64_t seed) {
    std::vector<std::vector<double>> seeds;
    std::size_t first = static_cast<std::size_t>(seed % points.size());
    seeds.push_back(points[first]);
    while (static_cast<int>(seeds.size()) < k) {
        double best = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double nearest = std::numeric_limits<double>::max();
            for (const auto& s : seeds) nearest = std::min(nearest, sq_dist(points[i], s));
            if (nearest > best) {
                best = nearest;
                best_idx = i;
            }
        }
        seeds.push_back(points[best_idx]);
    }
    return seeds;
}

}  // namespace detail

// Lloyd iteration on standardized features with deterministic greedy
// farthest-point seeding.
inline ClusterModel kmeans(const std::vector<LaneFeature>& features, int k, std::uint64_t seed = 0,
                           int max_iter = 300, double tol = 1e-6) {
    if (k < 1) throw ValidationError("kmeans: k >= 1 required");
    if (static_cast<std::size_t>(k) > features.size())
        throw ValidationError("kmeans: k exceeds the number of lanes");
    std::vector<std::vector<double>> points;
    points.reserve(features.size());
    for (const auto& f : features) points.push_back(f.z);
    ClusterModel m = detail::lloyd(points, detail::farthest_point_seeds(points, k, seed), max_iter, tol);
    m.seed = seed;
    return m;
}

inline std::map<LaneId, int> cluster_mapping(const std::vector<LaneFeature>& features,
                                             const ClusterModel& model) {
    std::map<LaneId, int> out;
    for (std::size_t i = 0; i < features.size(); ++i) out[features[i].lane] = model.assignment[i];
    return out;
}

struct ElbowPoint {
    int k = 0;
    double wcss = 0.0;
    bool is_knee = false;
};

// WCSS per k with a knee suggestion at the point farthest below the chord
// between the curve's endpoints. Each k also warm-starts from the previous
// solution's centroids plus the farthest point, keeping the curve
// nonincreasing.
inline std::vector<ElbowPoint> elbow_curve(const std::vector<LaneFeature>& features,
                                           const std::vector<int>& k_range, std::uint64_t seed = 0,
                                           int max_iter = 300, double tol = 1e-6) {
    if (k_range.empty()) throw ValidationError("elbow_curve: empty k range");
    std::vector<int> ks = k_range;
    std::sort(ks.begin(), ks.end());

    std::vector<std::vector<double>> points;
    points.reserve(features.size());
    for (const auto& f : features) points.push_back(f.z);

    std::vector<ElbowPoint> out;
    std::vector<std::vector<double>> prev_centroids;
    for (int k : ks) {
        ClusterModel fresh = kmeans(features, k, seed, max_iter, tol);
        ClusterModel best = fresh;
        if (!prev_centroids.empty() && static_cast<int>(prev_centroids.size()) < k &&
            static_cast<std::size_t>(k) <= points.size()) {
            auto warm = prev_centroids;
            while (static_cast<int>(warm.size()) < k) {
                double far = -1.0;
                std::size_t idx = 0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    double nearest = std::numeric_limits<double>::max();
                    for (const auto& c : warm) nearest = std::min(nearest, detail::sq_dist(points[i], c));
                    if (nearest > far) {
                        far = nearest;
                        idx = i;
                    }
                }
                warm.push_back(points[idx]);
            }
            ClusterModel warmed = detail::lloyd(points, warm, max_iter, tol);
            if (warmed.wcss < best.wcss) best = warmed;
        }
        out.push_back(ElbowPoint{k, best.wcss, false});
        prev_centroids = best.centroids;
    }

    // knee = interior point farthest below the chord joining the curve's
    // endpoints (the elbow of the wcss curve)
    if (out.size() >= 3) {
        double k0 = out.front().k, w0 = out.front().wcss;
        double k1 = out.back().k, w1 = out.back().wcss;
        double best = -std::numeric_limits<double>::max();
        std::size_t knee = 1;
        for (std::size_t i = 1; i + 1 < out.size(); ++i) {
            double chord = w0 + (w1 - w0) * (out[i].k - k0) / (k1 - k0);
            double d = chord - out[i].wcss;
            if (d > best) {
                best = d;
                knee = i;
            }
        }
        out[knee].is_knee = true;
    }
    return out;
}

}  // namespace avaas
