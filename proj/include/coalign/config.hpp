/* config.hpp */

#ifndef COALIGN_CONFIG_HPP
#define COALIGN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "coalign/benchmark.hpp"
#include "coalign/serialization.hpp"

namespace coalign {

/* Invalid configuration; `field` names the offending key */
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& field, const std::string& what) :
        std::runtime_error("config field '" + field + "': " + what), mField(field) {}
    const std::string& field() const { return mField; }

private:
    std::string mField;
};

/*
 * Every experiment parameter. Loaded from one flat JSON object; any key
 * may be omitted (defaults below), unknown keys are rejected. Noise
 * scales are meters / degrees, all angles in files are radians.
 */
struct RunConfig
{
    BenchmarkConfig benchmark;
    std::optional<std::uint64_t> seed;
    AgentId ego_id = 0;
    /* Pose noise applied by `solve` */
    NoiseLevel solve_noise{0.2, 0.2};

    NoiseSpec solve_noise_spec() const
    {
        return {benchmark.noise_kind, solve_noise.trans, solve_noise.rot_deg};
    }
};

RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& config);

} /* namespace coalign */

#endif /* COALIGN_CONFIG_HPP */
