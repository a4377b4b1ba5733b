#ifndef OBSREC_PATTERN_HPP
#define OBSREC_PATTERN_HPP

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace obsrec {

// Thrown when an input file or structure fails validation. The CLI maps
// this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency failures (an analysis result that contradicts a
// recheck). Never raised on bad user input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

// Sparsity structure of the system: edge (j, i) means state x_j feeds x_i
// (a_ij != 0). Sensors map an id to the set of states they measure.
// Indices are 1-based at this level, matching all file I/O.
struct SystemPattern {
  int n = 0;
  std::set<std::pair<int, int>> edges;                 // (from j, to i)
  std::map<std::string, std::set<int>> sensors;       // id -> measured states

  // Throws ValidationError naming the offending entry.
  void validate() const;
};

// Forward and reverse adjacency over states, 0-based internally.
struct Digraph {
  int n = 0;
  std::vector<std::vector<int>> out;  // out[j] = {i : edge j->i}, sorted
  std::vector<std::vector<int>> in;   // in[i]  = {j : edge j->i}, sorted
};

Digraph build_digraph(const SystemPattern& pattern);

// JSON (de)serialization of the system file:
//   { "n": int, "edges": [[j,i],...], "sensors": [{"id": str, "states": [..]}] }
SystemPattern parse_system(const std::string& json_text);
std::string serialize_system(const SystemPattern& pattern, int indent = 2);

}  // namespace obsrec

#endif
