/* fusion_eval.cpp */

#include "coalign/fusion_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace coalign {

RelativePoseError relative_pose_error(const Pose2& estimated, const Pose2& truth)
{
    const Pose2 diff = compose(inverse(truth), estimated);
    return {std::hypot(diff.x(), diff.y()), std::abs(diff.theta()) * 180.0 / std::numbers::pi};
}

std::vector<BoxDetection> late_fuse(const std::vector<AgentMessage>& messages,
                                    const std::map<AgentId, Pose2>& rel_poses,
                                    double nms_iou)
{
    struct Candidate
    {
        BoxDetection box;
        AgentId agent;
        std::size_t index;
    };

    std::vector<Candidate> candidates;
    for (const auto& msg : messages) {
        const auto rel = rel_poses.find(msg.agent_id);
        if (rel == rel_poses.end())
            throw std::invalid_argument("no relative pose for agent " + std::to_string(msg.agent_id));
        for (std::size_t i = 0; i < msg.boxes.size(); ++i) {
            BoxDetection warped = msg.boxes[i].transformed(rel->second);
            warped.agent_id = msg.agent_id;
            candidates.push_back({warped, msg.agent_id, i});
        }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.box.confidence, a.agent, a.index) <
               std::tie(a.box.confidence, b.agent, b.index);
    });

    std::vector<BoxDetection> kept;
    std::vector<OrientedBox2> keptFootprints;
    for (const auto& c : candidates) {
        const OrientedBox2 fp = c.box.footprint();
        const bool suppressed = std::any_of(
            keptFootprints.begin(), keptFootprints.end(),
            [&](const OrientedBox2& k) { return rotated_iou_bev(fp, k) > nms_iou; });
        if (suppressed)
            continue;
        kept.push_back(c.box);
        keptFootprints.push_back(fp);
    }
    return kept;
}

double average_precision(std::span<const ScoredBox> detections,
                         std::span<const OrientedBox2> ground_truth,
                         double iou_threshold,
                         ApInterpolation interpolation)
{
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
        throw std::invalid_argument("IoU threshold must lie in (0, 1)");
    if (ground_truth.empty())
        return detections.empty() ? 1.0 : 0.0;
    if (detections.empty())
        return 0.0;

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });

    std::vector<bool> matched(ground_truth.size(), false);
    std::vector<bool> isTp(order.size(), false);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const OrientedBox2& det = detections[order[r]].box;
        double best = -1.0;
        std::size_t bestGt = 0;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (matched[g])
                continue;
            const double iou = rotated_iou_bev(det, ground_truth[g]);
            if (iou > best) {
                best = iou;
                bestGt = g;
            }
        }
        if (best >= iou_threshold) {
            matched[bestGt] = true;
            isTp[r] = true;
        }
    }

    const double numGt = static_cast<double>(ground_truth.size());
    std::vector<double> precision(order.size());
    std::vector<double> recall(order.size());
    int tp = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        tp += isTp[r] ? 1 : 0;
        precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
        recall[r] = static_cast<double>(tp) / numGt;
    }

    /* Precision envelope: best precision at this rank or any later one */
    std::vector<double> envelope(precision);
    for (std::size_t r = envelope.size(); r-- > 1;)
        envelope[r - 1] = std::max(envelope[r - 1], envelope[r]);

    if (interpolation == ApInterpolation::AllPoint) {
        double ap = 0.0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (isTp[r])
                ap += envelope[r] / numGt;
        }
        return ap;
    }

    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
        const double level = i / 10.0;
        double best = 0.0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (recall[r] >= level)
                best = std::max(best, precision[r]);
        }
        sum += best;
    }
    return sum / 11.0;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Quantiles quantiles(const std::vector<double>& values)
{
    return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

Histogram make_histogram(const std::vector<double>& values, double lower, double upper, int bins)
{
    if (bins < 1 || !(upper > lower))
        throw std::invalid_argument("histogram needs bins >= 1 and upper > lower");
    Histogram h;
    h.lower = lower;
    h.upper = upper;
    h.density.assign(static_cast<std::size_t>(bins), 0.0);
    if (values.empty())
        return h;

    const double width = h.bin_width();
    for (double v : values) {
        auto bin = static_cast<long>(std::floor((v - lower) / width));
        bin = std::clamp(bin, 0L, static_cast<long>(bins) - 1);
        h.density[static_cast<std::size_t>(bin)] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(values.size()) * width);
    for (double& d : h.density)
        d *= norm;
    return h;
}

} /* namespace coalign */
