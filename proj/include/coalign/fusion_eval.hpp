/* fusion_eval.hpp */

#ifndef COALIGN_FUSION_EVAL_HPP
#define COALIGN_FUSION_EVAL_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "coalign/geometry.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/uncertainty.hpp"

namespace coalign {

struct RelativePoseError
{
    double trans = 0.0;    // meters
    double rot_deg = 0.0;  // degrees, in [0, 180]
};

/* Error of `estimated` against `truth`, measured in truth's frame */
RelativePoseError relative_pose_error(const Pose2& estimated, const Pose2& truth);

/*
 * Warps every sender's boxes into the ego frame with `rel_poses`
 * (sender -> ego) and runs greedy NMS: boxes are visited by descending
 * confidence, then ascending agent id, then box index, and a box is
 * dropped when its BEV IoU with an already kept box exceeds `nms_iou`.
 */
std::vector<BoxDetection> late_fuse(const std::vector<AgentMessage>& messages,
                                    const std::map<AgentId, Pose2>& rel_poses,
                                    double nms_iou = 0.15);

struct ScoredBox
{
    OrientedBox2 box;
    double confidence;
};

enum class ApInterpolation
{
    AllPoint,     // area under the precision envelope
    ElevenPoint,  // mean envelope precision at recall 0, 0.1, ..., 1
};

/*
 * Detections are matched greedily in descending confidence (stable on
 * input order); each one takes the unmatched ground truth with the
 * highest IoU, provided IoU >= threshold. Empty ground truth gives 0
 * when there are detections and 1 when there are none.
 */
double average_precision(std::span<const ScoredBox> detections,
                         std::span<const OrientedBox2> ground_truth,
                         double iou_threshold,
                         ApInterpolation interpolation = ApInterpolation::AllPoint);

struct Quantiles
{
    double p25 = 0.0;
    double median = 0.0;
    double p75 = 0.0;
};

/* Linear-interpolation quantile (type 7); throws on empty input */
double quantile(std::vector<double> values, double q);
Quantiles quantiles(const std::vector<double>& values);

struct Histogram
{
    double lower = 0.0;
    double upper = 1.0;
    std::vector<double> density;

    double bin_width() const { return (upper - lower) / static_cast<double>(density.size()); }
};

/* Density histogram; values past `upper` land in the last bin */
Histogram make_histogram(const std::vector<double>& values, double lower, double upper, int bins);

} /* namespace coalign */

#endif /* COALIGN_FUSION_EVAL_HPP */
