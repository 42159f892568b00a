#pragma once

#include "isoflow/rootsystem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isoflow::cli {

struct Check {
  std::string name;     // property being checked
  std::string subject;  // root system it ran on
  bool pass = false;
  std::string detail;
};

// Desk-scale property suites behind the `verify` subcommand: radial law,
// field/recursion consistency, exact-vs-numeric agreement, closed forms,
// scaling, separation, correspondence, and the A(3) portrait.  When `spec`
// is empty the suites run over a default battery of families.
std::vector<Check> run_verify_suites(
    const std::optional<weyl::RootSystemSpec>& spec, std::uint64_t seed);

}  // namespace isoflow::cli
