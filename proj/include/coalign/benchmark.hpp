/* benchmark.hpp */

#ifndef COALIGN_BENCHMARK_HPP
#define COALIGN_BENCHMARK_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coalign/fusion_eval.hpp"
#include "coalign/posegraph.hpp"
#include "coalign/scenario.hpp"

namespace coalign {

/* One (sigma_t [m], sigma_r [deg]) entry of the noise grid */
struct NoiseLevel
{
    double trans = 0.0;
    double rot_deg = 0.0;
};

struct BenchmarkConfig
{
    SceneConfig scene;
    NoiseKind noise_kind = NoiseKind::Gaussian;
    std::vector<NoiseLevel> noise_levels{{0.0, 0.0}, {0.2, 0.2}, {0.4, 0.4}, {0.6, 0.6}};
    DetectorSpec detector;
    SolverParams solver;
    ClusterParams cluster;
    double nms_iou = 0.15;
    int scenes = 1000;
    std::uint64_t seed = 0;
    std::vector<double> ap_thresholds{0.5, 0.7};
    ApInterpolation ap_interpolation = ApInterpolation::AllPoint;
    bool include_pair_errors = true;
    int threads = 1;

    void validate() const;
};

/* The three error series: raw measured poses, graph correction with
 * unit weights, graph correction with uncertainty weights */
enum class Series
{
    Before = 0,
    AfterGraph = 1,
    AfterGraphUncertainty = 2,
};
inline constexpr std::array<Series, 3> kAllSeries{Series::Before, Series::AfterGraph,
                                                   Series::AfterGraphUncertainty};
std::string series_name(Series s);

struct SeriesErrors
{
    std::vector<double> trans;
    std::vector<double> rot_deg;
};

/* Everything computed for one scene at one noise level */
struct SceneOutcome
{
    std::size_t scene_index = 0;
    std::array<SeriesErrors, 3> errors;
    /* AP per threshold, per series (uncorrected / graph / graph+uncertainty) */
    std::vector<std::array<double, 3>> ap;
    int iterations = 0;
    bool converged = true;
    bool monotone = true;
    bool ego_fixed = true;
    std::vector<double> objective_trace;
};

struct SkippedScene
{
    std::size_t level_index = 0;
    std::size_t scene_index = 0;
    std::string reason;
};

struct RatioSummary
{
    std::optional<double> trans;
    std::optional<double> rot;
    /* Set when the "before" median is zero and the ratio is undefined */
    bool degenerate = false;
};

struct LevelReport
{
    NoiseSpec noise;
    int scenes_completed = 0;
    std::array<SeriesErrors, 3> errors;
    std::array<std::optional<Quantiles>, 3> trans_quantiles;
    std::array<std::optional<Quantiles>, 3> rot_quantiles;
    /* after / before medians for AfterGraph and AfterGraphUncertainty */
    std::array<RatioSummary, 2> median_reduction;
    /* Mean per-scene AP, indexed [threshold][series] */
    std::vector<std::array<double, 3>> ap;
    long total_iterations = 0;
    int not_converged = 0;
    int monotone_violations = 0;
    int ego_moved = 0;
};

struct BenchmarkReport
{
    BenchmarkConfig config;
    std::vector<LevelReport> levels;
    std::vector<SkippedScene> skipped;

    bool clean() const { return skipped.empty(); }
};

/* Seeds of scene `index` and of its message noise */
std::uint64_t scene_seed(std::uint64_t seed, std::size_t index);
std::uint64_t message_seed(std::uint64_t scene_seed);

/* Full pipeline for one already generated scene */
SceneOutcome evaluate_scene(const Scene& scene, const NoiseSpec& noise,
                            const BenchmarkConfig& config, std::uint64_t messages_seed);

/* Order-deterministic regardless of `config.threads` */
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/* Histogram ranges used for the exported distributions */
inline constexpr double kTransHistogramMax = 3.0;  // meters
inline constexpr double kRotHistogramMax = 3.0;    // degrees
inline constexpr int kHistogramBins = 60;

} /* namespace coalign */

#endif /* COALIGN_BENCHMARK_HPP */
