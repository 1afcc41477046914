#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace atmpc::selftest {

struct SuiteResult {
  std::string name;
  bool passed = false;
  int checks = 0;
  int failures = 0;
  std::vector<std::string> messages;  // first few failures only
};

// geometry, observer, monitor, luenberger
const std::vector<std::string>& suite_names();

// Raises InvalidScenario for an unknown suite name.
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 7);

}  // namespace atmpc::selftest
