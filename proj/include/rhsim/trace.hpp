#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rhsim/config.hpp"
#include "rhsim/errors.hpp"
#include "rhsim/time.hpp"

namespace rhsim {

/// One single-access memory request. `seq` is the global arrival ordinal used
/// for age-based arbitration.
struct MemRequest {
  picos ready_at = 0;
  std::uint32_t thread = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint64_t seq = 0;
};

using Trace = std::vector<MemRequest>;

/// Parses the `ready_at_ps,thread,bank,row` text format. `#` starts a comment
/// line. Sequence numbers are assigned in file order.
inline Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    std::uint64_t fields[4];
    std::size_t pos = a;
    for (int f = 0; f < 4; ++f) {
      if (f > 0) {
        pos = line.find(',', pos);
        if (pos == std::string::npos) throw ParseError("expected 4 comma-separated fields", lineno);
        ++pos;
      }
      std::uint64_t v = 0;
      bool any = false;
      while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
        v = v * 10 + static_cast<std::uint64_t>(line[pos] - '0');
        any = true;
        ++pos;
      }
      if (!any) throw ParseError("bad integer field", lineno);
      fields[f] = v;
    }
    std::size_t rest = line.find_first_not_of(" \t\r", pos);
    if (rest != std::string::npos && line[rest] != '#')
      throw ParseError("trailing junk after fields", lineno);
    MemRequest r;
    r.ready_at = fields[0];
    r.thread = static_cast<std::uint32_t>(fields[1]);
    r.bank = static_cast<std::uint32_t>(fields[2]);
    r.row = fields[3];
    r.seq = trace.size();
    trace.push_back(r);
  }
  return trace;
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  return parse_trace(in);
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  out << "# ready_at_ps,thread,bank,row\n";
  for (const MemRequest& r : trace) {
    out << r.ready_at << ',' << r.thread << ',' << r.bank << ',' << r.row << '\n';
  }
}

/// Checks geometry bounds and the per-thread ready_at ordering precondition.
inline void validate_trace(const Trace& trace, const DramTimings& t) {
  std::vector<picos> last(t.threads, 0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const MemRequest& r = trace[i];
    if (r.thread >= t.threads) throw ParseError("thread id out of range", i + 1);
    if (r.bank >= t.banks_per_rank) throw ParseError("bank id out of range", i + 1);
    if (r.row >= t.rows_per_bank) throw ParseError("row id out of range", i + 1);
    if (r.ready_at < last[r.thread])
      throw ParseError("trace not sorted by ready_at within thread", i + 1);
    last[r.thread] = r.ready_at;
  }
}

/// Merges per-thread streams into one trace ordered by (ready_at, thread),
/// reassigning arrival ordinals.
inline Trace merge_traces(std::vector<Trace> parts) {
  Trace out;
  for (auto& p : parts)
    for (auto& r : p) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const MemRequest& a, const MemRequest& b) {
    if (a.ready_at != b.ready_at) return a.ready_at < b.ready_at;
    return a.thread < b.thread;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].seq = i;
  return out;
}

}  // namespace rhsim
