#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctqw/graph.hpp"

namespace ctqw::cli {

/// "v" for a single value, or "min:max:count[:lin|log]".
struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
  bool log = false;

  std::vector<double> values() const;
};

GridSpec parse_grid(const std::string& text);

/// "a", "a..b" or "a,b,c".
std::vector<long long> parse_int_list(const std::string& text);

/// Compact graph description: "family:key=value,..." with keys n, L, d, g,
/// periodic; two factors joined by '*' give a Cartesian product.
GraphSpec parse_graph(const std::string& text);

/// Runs one subcommand. Returns the process exit code: 0 ok, 2 configuration
/// error, 3 numerical failure, 4 dense guard exceeded, 5 write failure.
/// Errors are reported on `err` as a single JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctqw::cli
