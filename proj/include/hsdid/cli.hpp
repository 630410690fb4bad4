#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsdid/derive.hpp"
#include "hsdid/sim.hpp"

namespace hsdid {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitEstimation = 3,
  kExitInvariant = 4,
};

struct RunConfig {
  std::string verb;
  std::string input;
  std::string out = "out";
  std::string outcome = std::string(cols::kMcs);
  std::string tenure = "all";  // renter | owner | all
  std::string norms;           // empty: built-in Australian norms
  std::string oecd_scale = "modified";
  double income_floor = 1000.0;
  std::optional<std::uint64_t> seed;
  std::size_t reps = 200;
  std::string mc_pipeline = "did";
  DgpConfig dgp;

  std::vector<Tenure> tenures() const;
  /// Stable key = value rendering used for the manifest hash.
  std::string canonical() const;
};

/// Entry point behind the `hsdid` executable. Errors print one line
/// "<CODE>: <message>" to `err` and return the matching exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace hsdid
