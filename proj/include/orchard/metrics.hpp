#pragma once

#include "orchard/image.hpp"
#include "orchard/mask_ops.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace orchard {

/// Pixel confusion matrix plus component-level detection counts.
/// p[i][j] counts pixels of true class i predicted as class j.
struct ConfusionCounts {
    int k = 0;
    std::vector<std::vector<std::int64_t>> p;
    std::int64_t tp = 0, fp = 0, fn = 0;
    double iou_threshold = 0.5; // matching threshold the detection counts were made at

    static ConfusionCounts zeros(int k) {
        if (k < 1) throw std::invalid_argument("ConfusionCounts: k must be >= 1");
        ConfusionCounts c;
        c.k = k;
        c.p.assign(k, std::vector<std::int64_t>(k, 0));
        return c;
    }
};

struct DetectionScores {
    std::optional<double> precision; // empty when TP+FP = 0
    std::optional<double> recall;    // empty when TP+FN = 0
    double f1 = 0;
    bool f1_defined = false; // false when either score is undefined or both are 0
};

inline DetectionScores detection_scores(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0)
        throw std::invalid_argument("detection_scores: negative counts");
    DetectionScores s;
    if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (s.precision && s.recall && (*s.precision + *s.recall > 0)) {
        s.f1 = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
        s.f1_defined = true;
    }
    return s;
}

struct MiouResult {
    double value = 0;
    std::vector<bool> class_included; // classes with no true and no predicted pixels are excluded
};

/// Mean of per-class IoU = p_ii / (row_i + col_i - p_ii) over non-empty
/// classes. Returns nothing when every class is empty.
inline std::optional<MiouResult> miou(const ConfusionCounts& c) {
    if (c.k < 1 || static_cast<int>(c.p.size()) != c.k)
        throw std::invalid_argument("miou: malformed counts");
    MiouResult r;
    r.class_included.assign(c.k, false);
    double sum = 0;
    int included = 0;
    for (int i = 0; i < c.k; ++i) {
        if (static_cast<int>(c.p[i].size()) != c.k)
            throw std::invalid_argument("miou: malformed counts");
        std::int64_t row = 0, col = 0;
        for (int j = 0; j < c.k; ++j) {
            if (c.p[i][j] < 0 || c.p[j][i] < 0) throw std::invalid_argument("miou: negative counts");
            row += c.p[i][j];
            col += c.p[j][i];
        }
        if (row + col == 0) continue;
        r.class_included[i] = true;
        ++included;
        sum += static_cast<double>(c.p[i][i]) / static_cast<double>(row + col - c.p[i][i]);
    }
    if (included == 0) return std::nullopt;
    r.value = sum / included;
    return r;
}

/// Tallies two label masks into pixel confusion counts and component-level
/// detection counts. Detection treats every nonzero 8-connected region as one
/// object regardless of its label (instance ids are arbitrary); regions are
/// matched greedily by descending IoU at iou_threshold.
template <typename T>
ConfusionCounts masks_to_counts(const Image<T>& pred, const Image<T>& truth, int k,
                                double iou_threshold = 0.5) {
    if (!pred.same_size(truth.width(), truth.height()))
        throw std::invalid_argument("masks_to_counts: mask shapes differ");
    if (!(iou_threshold > 0 && iou_threshold <= 1))
        throw std::invalid_argument("masks_to_counts: iou_threshold must be in (0, 1]");
    ConfusionCounts c = ConfusionCounts::zeros(k);
    c.iou_threshold = iou_threshold;
    for (int y = 0; y < truth.height(); ++y) {
        for (int x = 0; x < truth.width(); ++x) {
            const auto t = truth(x, y);
            const auto q = pred(x, y);
            if (static_cast<std::int64_t>(t) >= k || static_cast<std::int64_t>(q) >= k)
                throw std::invalid_argument("masks_to_counts: label outside [0, k)");
            ++c.p[static_cast<int>(t)][static_cast<int>(q)];
        }
    }

    const ComponentLabels tc = label_components(truth);
    const ComponentLabels pc = label_components(pred);
    std::map<std::pair<int, int>, std::int64_t> overlap;
    for (int y = 0; y < truth.height(); ++y) {
        for (int x = 0; x < truth.width(); ++x) {
            const int ti = tc.labels(x, y);
            const int pi = pc.labels(x, y);
            if (ti && pi) ++overlap[{ti, pi}];
        }
    }
    struct Pair {
        double iou;
        int t, p;
    };
    std::vector<Pair> pairs;
    pairs.reserve(overlap.size());
    for (const auto& [tp_ids, inter] : overlap) {
        const auto [ti, pi] = tp_ids;
        const double uni =
            static_cast<double>(tc.areas[ti - 1] + pc.areas[pi - 1] - inter);
        pairs.push_back({static_cast<double>(inter) / uni, ti, pi});
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(b.iou, a.t, a.p) < std::tie(a.iou, b.t, b.p);
    });
    std::vector<bool> t_used(tc.count + 1, false), p_used(pc.count + 1, false);
    for (const Pair& pr : pairs) {
        if (pr.iou < iou_threshold) break;
        if (t_used[pr.t] || p_used[pr.p]) continue;
        t_used[pr.t] = p_used[pr.p] = true;
        ++c.tp;
    }
    for (int t = 1; t <= tc.count; ++t)
        if (!t_used[t]) ++c.fn;
    for (int p = 1; p <= pc.count; ++p)
        if (!p_used[p]) ++c.fp;
    return c;
}

} // namespace orchard
