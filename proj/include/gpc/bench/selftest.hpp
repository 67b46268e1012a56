#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpc::bench {

struct SelftestOptions {
    std::filesystem::path executable; // for the process backends
    std::size_t individuals = 100;    // per problem, oracle check
    std::uint64_t seed = 1;
    // Fault injection.
    bool corrupt_module_magic = false;
    bool kill_daemon = false;
};

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestCheck> checks;
    bool passed() const;
};

SelftestReport selftest(const SelftestOptions& opts, std::ostream* log = nullptr);

} // namespace gpc::bench
