/* benchmark.cpp */

#include "coalign/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>
#include <variant>

namespace coalign {

namespace {

bool non_increasing(const std::vector<double>& trace)
{
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i] > trace[i - 1])
            return false;
    }
    return true;
}

bool visible_to_any(const Scene& scene, const ObjectState& obj, const DetectorSpec& det)
{
    for (const auto& a : scene.agents) {
        const Pose2 rel = compose(inverse(a.true_pose), obj.true_pose);
        if (std::hypot(rel.x(), rel.y()) <= det.detection_range &&
            std::abs(rel.x()) <= scene.extent.half_x && std::abs(rel.y()) <= scene.extent.half_y)
            return true;
    }
    return false;
}

std::vector<ScoredBox> scored(const std::vector<BoxDetection>& boxes)
{
    std::vector<ScoredBox> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes)
        out.push_back({b.footprint(), b.confidence});
    return out;
}

void append(std::vector<double>& dst, const std::vector<double>& src)
{
    dst.insert(dst.end(), src.begin(), src.end());
}

RatioSummary median_ratio(const LevelReport& level, Series after)
{
    RatioSummary r;
    const auto& before = level.errors[static_cast<int>(Series::Before)];
    const auto& corrected = level.errors[static_cast<int>(after)];
    if (before.trans.empty() || corrected.trans.empty())
        return r;
    const double bt = quantile(before.trans, 0.5);
    const double br = quantile(before.rot_deg, 0.5);
    if (bt == 0.0 || br == 0.0)
        r.degenerate = true;
    if (bt != 0.0)
        r.trans = quantile(corrected.trans, 0.5) / bt;
    if (br != 0.0)
        r.rot = quantile(corrected.rot_deg, 0.5) / br;
    return r;
}

} /* namespace */

std::string series_name(Series s)
{
    switch (s) {
    case Series::Before:
        return "before";
    case Series::AfterGraph:
        return "after-graph";
    case Series::AfterGraphUncertainty:
        return "after-graph+uncertainty";
    }
    return "unknown";
}

void BenchmarkConfig::validate() const
{
    scene.validate();
    detector.validate();
    solver.validate();
    if (!(cluster.center_gap > 0.0))
        throw std::invalid_argument("center_gap must be positive");
    if (!(nms_iou > 0.0 && nms_iou <= 1.0))
        throw std::invalid_argument("nms_iou must lie in (0, 1]");
    if (scenes < 1)
        throw std::invalid_argument("scenes must be at least 1");
    if (noise_levels.empty())
        throw std::invalid_argument("noise_levels must not be empty");
    for (const auto& l : noise_levels)
        NoiseSpec{noise_kind, l.trans, l.rot_deg}.validate();
    for (double t : ap_thresholds) {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("ap_thresholds must lie in (0, 1)");
    }
    if (threads < 1)
        throw std::invalid_argument("threads must be at least 1");
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t index)
{
    return mix_seed(mix_seed(seed) + static_cast<std::uint64_t>(index));
}

std::uint64_t message_seed(std::uint64_t scene_seed)
{
    return mix_seed(scene_seed ^ 0x6d657373ULL);
}

SceneOutcome evaluate_scene(const Scene& scene, const NoiseSpec& noise,
                            const BenchmarkConfig& config, std::uint64_t messages_seed)
{
    const std::vector<AgentMessage> messages =
        make_messages(scene, noise, config.detector, messages_seed);

    AgentId ego = scene.agents.front().id;
    for (const auto& a : scene.agents)
        ego = std::min(ego, a.id);

    std::map<AgentId, Pose2> truth;
    for (const auto& a : scene.agents)
        truth.emplace(a.id, a.true_pose);
    std::map<AgentId, Pose2> measured;
    for (const auto& m : messages)
        measured.emplace(m.agent_id, m.measured_pose);

    SceneOutcome out;
    std::array<std::map<AgentId, Pose2>, 3> globals;
    globals[static_cast<int>(Series::Before)] = measured;

    const std::array<std::pair<Series, EdgeWeighting>, 2> solves{
        std::pair{Series::AfterGraph, EdgeWeighting::Identity},
        std::pair{Series::AfterGraphUncertainty, EdgeWeighting::Uncertainty}};
    for (const auto& [series, weighting] : solves) {
        const PoseGraph graph = build_pose_graph(messages, ego, config.cluster, weighting);
        const OptimizeResult res = optimize(graph, config.solver);
        const std::size_t egoIndex = graph.ego_index();
        out.monotone = out.monotone && non_increasing(res.objective_trace);
        out.ego_fixed = out.ego_fixed &&
                        res.agent_poses[egoIndex] == graph.agent_nodes[egoIndex].pose;
        if (series == Series::AfterGraphUncertainty) {
            out.iterations = res.iterations;
            out.converged = res.converged;
            out.objective_trace = res.objective_trace;
        }
        globals[static_cast<int>(series)] = agent_pose_map(graph, res.agent_poses);
    }

    for (Series s : kAllSeries) {
        const auto& est = globals[static_cast<int>(s)];
        auto& errs = out.errors[static_cast<int>(s)];
        for (const auto& [i, pi] : est) {
            for (const auto& [j, pj] : est) {
                if (i == j)
                    continue;
                const RelativePoseError e = relative_pose_error(
                    compose(inverse(pi), pj), compose(inverse(truth.at(i)), truth.at(j)));
                errs.trans.push_back(e.trans);
                errs.rot_deg.push_back(e.rot_deg);
            }
        }
    }

    const Pose2 egoInverse = inverse(truth.at(ego));
    std::vector<OrientedBox2> groundTruth;
    for (const auto& obj : scene.objects) {
        if (visible_to_any(scene, obj, config.detector))
            groundTruth.push_back(obj.footprint().transformed(egoInverse));
    }

    std::array<std::vector<ScoredBox>, 3> fused;
    for (Series s : kAllSeries)
        fused[static_cast<int>(s)] =
            scored(late_fuse(messages, relative_poses(globals[static_cast<int>(s)], ego),
                             config.nms_iou));

    for (double threshold : config.ap_thresholds) {
        std::array<double, 3> row{};
        for (Series s : kAllSeries)
            row[static_cast<int>(s)] = average_precision(fused[static_cast<int>(s)], groundTruth,
                                                         threshold, config.ap_interpolation);
        out.ap.push_back(row);
    }
    return out;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config)
{
    config.validate();

    const std::size_t numLevels = config.noise_levels.size();
    const auto numScenes = static_cast<std::size_t>(config.scenes);
    const std::size_t total = numLevels * numScenes;

    using Slot = std::variant<std::monostate, SceneOutcome, std::string>;
    std::vector<Slot> slots(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t item = next++; item < total; item = next++) {
            const std::size_t level = item / numScenes;
            const std::size_t index = item % numScenes;
            const NoiseSpec noise{config.noise_kind, config.noise_levels[level].trans,
                                  config.noise_levels[level].rot_deg};
            try {
                const std::uint64_t sSeed = scene_seed(config.seed, index);
                const Scene scene = generate_scene(config.scene, sSeed);
                SceneOutcome outcome = evaluate_scene(scene, noise, config, message_seed(sSeed));
                outcome.scene_index = index;
                slots[item] = std::move(outcome);
            } catch (const std::exception& e) {
                slots[item] = std::string(e.what());
            }
        }
    };

    const auto numThreads = static_cast<std::size_t>(std::max(1, config.threads));
    if (numThreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < numThreads; ++t)
            pool.emplace_back(worker);
    }

    BenchmarkReport report;
    report.config = config;
    for (std::size_t level = 0; level < numLevels; ++level) {
        LevelReport lr;
        lr.noise = {config.noise_kind, config.noise_levels[level].trans,
                    config.noise_levels[level].rot_deg};
        lr.ap.assign(config.ap_thresholds.size(), std::array<double, 3>{});

        for (std::size_t index = 0; index < numScenes; ++index) {
            Slot& slot = slots[level * numScenes + index];
            if (auto* reason = std::get_if<std::string>(&slot)) {
                report.skipped.push_back({level, index, *reason});
                continue;
            }
            const SceneOutcome& o = std::get<SceneOutcome>(slot);
            ++lr.scenes_completed;
            for (Series s : kAllSeries) {
                append(lr.errors[static_cast<int>(s)].trans, o.errors[static_cast<int>(s)].trans);
                append(lr.errors[static_cast<int>(s)].rot_deg, o.errors[static_cast<int>(s)].rot_deg);
            }
            for (std::size_t t = 0; t < o.ap.size(); ++t) {
                for (int s = 0; s < 3; ++s)
                    lr.ap[t][s] += o.ap[t][s];
            }
            lr.total_iterations += o.iterations;
            lr.not_converged += o.converged ? 0 : 1;
            lr.monotone_violations += o.monotone ? 0 : 1;
            lr.ego_moved += o.ego_fixed ? 0 : 1;
        }

        if (lr.scenes_completed > 0) {
            for (auto& row : lr.ap) {
                for (double& v : row)
                    v /= lr.scenes_completed;
            }
        }
        for (Series s : kAllSeries) {
            const auto& errs = lr.errors[static_cast<int>(s)];
            if (!errs.trans.empty()) {
                lr.trans_quantiles[static_cast<int>(s)] = quantiles(errs.trans);
                lr.rot_quantiles[static_cast<int>(s)] = quantiles(errs.rot_deg);
            }
        }
        lr.median_reduction[0] = median_ratio(lr, Series::AfterGraph);
        lr.median_reduction[1] = median_ratio(lr, Series::AfterGraphUncertainty);
        report.levels.push_back(std::move(lr));
    }
    return report;
}

} /* namespace coalign */
