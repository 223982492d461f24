/* test_cli.cpp: drives the built executable */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include "coalign/config.hpp"
#include "coalign/serialization.hpp"

using namespace coalign;
namespace fs = std::filesystem;

namespace {

struct RunResult
{
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args, const std::string& redirect = "2>/dev/null")
{
    const std::string cmd = std::string(COALIGN_CLI_PATH) + " " + args + " " + redirect;
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
        r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/* Stderr only, for checking diagnostics */
RunResult run_stderr(const std::string& args)
{
    return run(args, "2>&1 1>/dev/null");
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class TempDir
{
public:
    TempDir()
    {
        mPath = fs::temp_directory_path() /
                ("coalign_cli_" + std::to_string(::getpid()) + "_" + std::to_string(sCounter++));
        fs::create_directories(mPath);
    }
    ~TempDir() { fs::remove_all(mPath); }
    fs::path operator/(const std::string& name) const { return mPath / name; }

private:
    static inline int sCounter = 0;
    fs::path mPath;
};

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} /* namespace */

TEST_CASE("generate")
{
    TempDir dir;
    const auto a = dir / "a.json";
    const auto b = dir / "b.json";
    REQUIRE(run("generate --seed 1 --out " + a.string()).code == 0);
    REQUIRE(run("generate --seed 1 --out " + b.string()).code == 0);
    CHECK(slurp(a) == slurp(b));

    const Scene s = scene_from_json(read_json_file(a));
    CHECK(s.agents.size() == 4);
    CHECK(s.objects.size() == 10);
    CHECK(dump_json(scene_to_json(s)) == slurp(a));
    CHECK(dump_json(scene_to_json(generate_scene({}, 1))) == slurp(a));

    CHECK(run_stderr("generate --seed 1 --out " + a.string()).out.find("seed 1") != std::string::npos);

    write(dir / "dense.json", R"({"objects": 80, "area_x": 20, "area_y": 20, "max_placement_attempts": 100})");
    const RunResult dense = run_stderr("generate --seed 1 --config " + (dir / "dense.json").string());
    CHECK(dense.code != 0);
    CHECK(dense.out.find("infeasible packing") != std::string::npos);

    write(dir / "typo.json", R"({"agnets": 3})");
    const RunResult typo = run_stderr("generate --config " + (dir / "typo.json").string());
    CHECK(typo.code == 1);
    CHECK(typo.out.find("agnets") != std::string::npos);

    CHECK(run("generate --out /nonexistent/dir/x.json").code == 2);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("").code == 1);
}

TEST_CASE("solve")
{
    TempDir dir;
    const auto scenePath = dir / "scene.json";
    REQUIRE(run("generate --seed 4 --out " + scenePath.string()).code == 0);
    const Scene scene = scene_from_json(read_json_file(scenePath));

    SUBCASE("zero noise recovers true relative poses")
    {
        write(dir / "clean.json",
              R"({"solve_noise": [0, 0], "center_noise_sd": 0, "heading_noise_sd": 0})");
        const RunResult r = run("solve --seed 3 --scene " + scenePath.string() + " --config " +
                                (dir / "clean.json").string());
        REQUIRE(r.code == 0);
        const Json j = Json::parse(r.out);
        const Pose2 ego = scene.agent(0).true_pose;
        for (const auto& e : j["corrected_relative_poses"]) {
            const Pose2 got = pose_from_json(e["pose"], "");
            const Pose2 truth = compose(inverse(ego), scene.agent(e["agent_id"].get<int>()).true_pose);
            CHECK(std::abs(got.x() - truth.x()) < 1e-6);
            CHECK(std::abs(got.y() - truth.y()) < 1e-6);
            CHECK(std::abs(normalize_angle(got.theta() - truth.theta())) < 1e-6);
        }
    }

    SUBCASE("noisy run matches the library call")
    {
        const RunResult r = run("solve --seed 11 --ego 2 --scene " + scenePath.string());
        REQUIRE(r.code == 0);
        const Json j = Json::parse(r.out);

        const auto trace = j["objective_trace"].get<std::vector<double>>();
        REQUIRE(!trace.empty());
        for (std::size_t i = 1; i < trace.size(); ++i)
            CHECK(trace[i] <= trace[i - 1]);

        const RunConfig defaults;
        const SolveOutput direct = solve_scene(scene, defaults.solve_noise_spec(),
                                               defaults.benchmark.detector, defaults.benchmark.cluster,
                                               defaults.benchmark.solver, 2, 11);
        CHECK(r.out == dump_json(solve_output_to_json(direct)));
        CHECK(j["ego_id"] == 2);

        // the emitted messages load back as the simulated ones
        const auto msgs = messages_from_json(j["messages"]);
        REQUIRE(msgs.size() == direct.messages.size());
        for (std::size_t i = 0; i < msgs.size(); ++i)
            CHECK(msgs[i].measured_pose == direct.messages[i].measured_pose);
    }

    SUBCASE("errors")
    {
        const RunResult missingEgo = run_stderr("solve --ego 9 --scene " + scenePath.string());
        CHECK(missingEgo.code == 1);
        CHECK(missingEgo.out.find("ego") != std::string::npos);

        Json bad = read_json_file(scenePath);
        bad["agents"][0]["pose"] = "here";
        write(dir / "bad.json", dump_json(bad));
        const RunResult schema = run_stderr("solve --scene " + (dir / "bad.json").string());
        CHECK(schema.code == 1);
        CHECK(schema.out.find("/agents/0/pose") != std::string::npos);

        CHECK(run("solve").code == 1);
        CHECK(run("solve --scene " + (dir / "missing.json").string()).code == 1);
    }
}

TEST_CASE("benchmark")
{
    TempDir dir;
    write(dir / "small.json", R"({"scenes": 20, "noise_levels": [[0,0],[0.2,0.2],[0.4,0.4],[0.6,0.6]]})");
    const std::string cfg = " --config " + (dir / "small.json").string();

    const RunResult a = run("benchmark --seed 6" + cfg);
    REQUIRE(a.code == 0);
    const Json j = Json::parse(a.out);
    REQUIRE(j["levels"].size() == 4);
    for (const auto& lvl : j["levels"]) {
        CHECK(lvl["scenes_completed"] == 20);
        for (const char* s : {"before", "after-graph", "after-graph+uncertainty"}) {
            CHECK(lvl["series"][s]["trans_quantiles"].contains("median"));
            CHECK(lvl["series"][s]["rot_quantiles"].contains("p75"));
        }
        CHECK(lvl["ap"].contains("0.7"));
    }
    CHECK(j["status"] == "clean");
    CHECK(j["levels"][0]["median_reduction_ratio"]["after-graph+uncertainty"]["degenerate"] == true);

    // byte-identical across runs and thread counts
    CHECK(run("benchmark --seed 6 --threads 3" + cfg).out == a.out);

    const RunResult csv = run("benchmark --seed 6 --format csv" + cfg);
    REQUIRE(csv.code == 0);
    std::istringstream lines(csv.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "noise_trans,noise_rot_deg,metric,bin_left,bin_right,density,series");
    std::set<std::string> series;
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        series.insert(line.substr(line.rfind(',') + 1));
        ++rows;
    }
    CHECK(series == std::set<std::string>{"before", "after-graph", "after-graph+uncertainty"});
    CHECK(rows == 4 * 2 * 3 * 60);

    // report written to a file equals stdout
    REQUIRE(run("benchmark --seed 6 --out " + (dir / "r.json").string() + cfg).code == 0);
    CHECK(slurp(dir / "r.json") == a.out);

    CHECK(run("benchmark" + cfg).code == 1);  // no seed
    CHECK(run("benchmark --seed 6 --format xml" + cfg).code == 1);
    CHECK(run("benchmark --seed 6 --threads 0" + cfg).code == 1);
}

TEST_CASE("thread count from the environment")
{
    TempDir dir;
    write(dir / "small.json", R"({"scenes": 8, "noise_levels": [[0.6, 0.6]]})");
    const std::string tail = " benchmark --seed 2 --config " + (dir / "small.json").string() + " 2>/dev/null";
    const auto shell = [&](const std::string& env) {
        RunResult r;
        FILE* pipe = popen((env + " " + std::string(COALIGN_CLI_PATH) + tail).c_str(), "r");
        char buf[4096];
        std::size_t n;
        while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
            r.out.append(buf, n);
        const int status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    };
    const RunResult one = shell("COALIGN_THREADS=1");
    const RunResult four = shell("COALIGN_THREADS=4");
    CHECK(one.code == 0);
    CHECK(four.code == 0);
    CHECK(one.out == four.out);
    CHECK(shell("COALIGN_THREADS=abc").code == 1);
}

TEST_CASE("selftest")
{
    const RunResult r = run("selftest --seed 3");
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
}
