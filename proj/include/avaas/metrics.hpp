#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avaas/common.hpp"
#include "avaas/estimation.hpp"

namespace avaas {

enum class Quantity { Density, Speed, Flow };

inline std::string quantity_name(Quantity q) {
    switch (q) {
        case Quantity::Density: return "k";
        case Quantity::Speed: return "v";
        default: return "q";
    }
}

struct ErrorRecord {
    Scope scope;
    double interval_start_s = 0.0;
    Quantity quantity = Quantity::Density;
    double true_value = 0.0;
    double estimated_value = 0.0;
    double relative_error = 0.0;
    bool zero_true_fallback = false;  // true_value == 0: relative_error holds |est|
};

// |true - est| / |true|; the undefined true = 0 case falls back to the
// absolute error with a flag.
inline ErrorRecord relative_error(double true_value, double estimated_value) {
    ErrorRecord r;
    r.true_value = true_value;
    r.estimated_value = estimated_value;
    if (true_value != 0.0) {
        r.relative_error = std::abs(true_value - estimated_value) / std::abs(true_value);
    } else {
        r.relative_error = std::abs(estimated_value);
        r.zero_true_fallback = true;
    }
    return r;
}

struct QuantitySummary {
    Quantity quantity = Quantity::Density;
    long count = 0;
    double mean_rel_err = 0.0;
    double median_rel_err = 0.0;
    double p90_rel_err = 0.0;
    double overestimated_fraction = 0.0;  // ties count half
};

struct ComparisonReport {
    std::vector<ErrorRecord> records;
    std::vector<QuantitySummary> summaries;  // one per quantity with data
    long joined = 0;                          // matched (scope, interval) pairs
};

namespace detail {

inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double idx = p * (v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(idx);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = idx - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

// Strict inner-join of ground-truth and estimated series on
// (scope, interval); one record per quantity present on both sides.
inline ComparisonReport compare(const std::vector<TrafficState>& ground_truth_series,
                                const std::vector<TrafficState>& estimated_series) {
    struct Key {
        Scope scope;
        double ts;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, const TrafficState*> gt;
    for (const TrafficState& t : ground_truth_series) gt[{t.scope, t.interval_start_s}] = &t;

    ComparisonReport rep;
    std::map<Quantity, std::vector<const ErrorRecord*>> by_q;
    for (const TrafficState& est : estimated_series) {
        auto it = gt.find({est.scope, est.interval_start_s});
        if (it == gt.end()) continue;
        const TrafficState& g = *it->second;
        ++rep.joined;
        auto add = [&](Quantity q, const std::optional<double>& tv, const std::optional<double>& ev) {
            if (!tv || !ev) return;
            ErrorRecord r = relative_error(*tv, *ev);
            r.scope = est.scope;
            r.interval_start_s = est.interval_start_s;
            r.quantity = q;
            rep.records.push_back(r);
        };
        add(Quantity::Density, g.k_vpk, est.k_vpk);
        add(Quantity::Speed, g.v_kmh, est.v_kmh);
        add(Quantity::Flow, g.q_vph, est.q_vph);
    }

    for (Quantity q : {Quantity::Density, Quantity::Speed, Quantity::Flow}) {
        std::vector<double> errs;
        double over = 0.0;
        for (const ErrorRecord& r : rep.records) {
            if (r.quantity != q) continue;
            errs.push_back(r.relative_error);
            if (r.estimated_value > r.true_value)
                over += 1.0;
            else if (r.estimated_value == r.true_value)
                over += 0.5;
        }
        if (errs.empty()) continue;
        QuantitySummary s;
        s.quantity = q;
        s.count = static_cast<long>(errs.size());
        for (double e : errs) s.mean_rel_err += e;
        s.mean_rel_err /= errs.size();
        s.median_rel_err = detail::percentile(errs, 0.5);
        s.p90_rel_err = detail::percentile(errs, 0.9);
        s.overestimated_fraction = over / errs.size();
        rep.summaries.push_back(s);
    }
    return rep;
}

struct HistogramBin {
    double lower = 0.0;  // bin covers [lower, lower + width)
    long count = 0;
};

// Fixed-width relative-error histogram (plot-ready data, no rendering).
inline std::vector<HistogramBin> error_histogram(const std::vector<ErrorRecord>& records, Quantity q,
                                                 double bin_width = 0.05) {
    std::map<long, long> bins;
    for (const ErrorRecord& r : records) {
        if (r.quantity != q || r.zero_true_fallback) continue;
        bins[static_cast<long>(std::floor(r.relative_error / bin_width))] += 1;
    }
    std::vector<HistogramBin> out;
    for (const auto& [idx, count] : bins) out.push_back(HistogramBin{idx * bin_width, count});
    return out;
}

struct MFDPoint {
    Scope scope;
    double interval_start_s = 0.0;
    std::optional<double> k_avg_vpk;
    std::optional<double> q_avg_vph;
    std::optional<double> v_avg_kmh;
    Source source = Source::GroundTruth;
};

// One scatter point per interval, ordered by interval start; one point per
// (scope, ts, source).
inline std::vector<MFDPoint> mfd_series(const std::vector<TrafficState>& states,
                                        std::optional<ScopeKind> scope_filter = std::nullopt) {
    std::vector<MFDPoint> out;
    for (const TrafficState& t : states) {
        if (scope_filter && t.scope.kind != *scope_filter) continue;
        MFDPoint p;
        p.scope = t.scope;
        p.interval_start_s = t.interval_start_s;
        p.k_avg_vpk = t.k_vpk;
        p.q_avg_vph = t.q_vph;
        p.v_avg_kmh = t.v_kmh;
        p.source = t.source;
        out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(), [](const MFDPoint& a, const MFDPoint& b) {
        if (a.scope != b.scope) return a.scope < b.scope;
        if (a.source != b.source) return a.source < b.source;
        return a.interval_start_s < b.interval_start_s;
    });
    return out;
}

}  // namespace avaas
