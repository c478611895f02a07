#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zml/parallel.hpp"

namespace zml::cli {

struct SelftestRow {
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Quick invariant suite across all modules. Random inputs come from the
/// counter generator seeded by `seed`; rows never contain timings.
std::vector<SelftestRow> run_selftest(std::uint64_t seed, Parallel par);

void write_selftest_csv(std::ostream& os, const std::vector<SelftestRow>& rows);

}  // namespace zml::cli
