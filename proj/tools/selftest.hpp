/* selftest.hpp */

#ifndef COALIGN_TOOLS_SELFTEST_HPP
#define COALIGN_TOOLS_SELFTEST_HPP

#include <cstdint>
#include <ostream>

namespace coalign::tools {

/* Quick randomized oracle checks; one PASS/FAIL line each */
bool run_selftest(std::ostream& out, std::uint64_t seed);

} /* namespace coalign::tools */

#endif /* COALIGN_TOOLS_SELFTEST_HPP */
