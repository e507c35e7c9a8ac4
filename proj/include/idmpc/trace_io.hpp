// Copyright 2026 The idmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDMPC__TRACE_IO_HPP_
#define IDMPC__TRACE_IO_HPP_

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "loop.hpp"

namespace idmpc {

inline std::vector<std::string> trace_columns(Index n, Index m, Index p)
{
  std::vector<std::string> cols{"t"};
  for (Index i = 1; i <= n; ++i) { cols.push_back("x" + std::to_string(i)); }
  for (Index i = 1; i <= m; ++i) { cols.push_back("u" + std::to_string(i)); }
  for (Index i = 1; i <= p; ++i) { cols.push_back("y" + std::to_string(i)); }
  if (p == 1) {
    cols.emplace_back("y_ref");
  } else {
    for (Index i = 1; i <= p; ++i) { cols.push_back("y_ref" + std::to_string(i)); }
  }
  for (const char * c : {"J_star", "J_hat_star", "V", "sigma_min_Z", "id_error", "status", "frozen"}) { cols.emplace_back(c); }
  return cols;
}

/**
 * @brief One row per time step 0..T. Solve-instant columns are empty elsewhere; the input columns
 * are empty on the last row.
 */
inline void write_trace_csv(std::ostream & os, const ClosedLoopTrace & trace)
{
  const auto cols = trace_columns(trace.n, trace.m, trace.p);
  for (std::size_t i = 0; i < cols.size(); ++i) { os << (i ? "," : "") << cols[i]; }
  os << '\n';

  std::size_t s = 0;
  for (std::size_t t = 0; t < trace.x.size(); ++t) {
    os << t;
    for (Index i = 0; i < trace.n; ++i) { os << ',' << format_double(trace.x[t][i]); }
    for (Index i = 0; i < trace.m; ++i) {
      os << ',';
      if (t < trace.u.size()) { os << format_double(trace.u[t][i]); }
    }
    for (Index i = 0; i < trace.p; ++i) { os << ',' << format_double(trace.y[t][i]); }
    for (Index i = 0; i < trace.p; ++i) { os << ',' << format_double(trace.y_ref[i]); }
    while (s < trace.solves.size() && trace.solves[s].t < static_cast<long>(t)) { ++s; }
    if (s < trace.solves.size() && trace.solves[s].t == static_cast<long>(t)) {
      const SolveRecord & r = trace.solves[s];
      os << ',' << format_double(r.J_star) << ',' << format_double(r.J_hat_star) << ',' << format_double(r.V) << ','
         << format_double(r.sigma_min_Z) << ',' << format_double(r.id_error) << ',' << to_string(r.status) << ','
         << (r.frozen ? 1 : 0);
    } else {
      os << ",,,,,,,";
    }
    os << '\n';
  }
}

/// Parsed trace CSV; numeric cells are nullopt where the file has an empty field.
struct TraceTable
{
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;

  std::size_t rows() const { return cells.size(); }

  std::size_t column(const std::string & name) const
  {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) { return j; }
    }
    throw DimensionError("trace has no column '" + name + "'");
  }

  std::optional<double> number(std::size_t row, const std::string & name) const
  {
    const std::string & c = cells.at(row).at(column(name));
    if (c.empty()) { return std::nullopt; }
    return parse_double(c);
  }

  const std::string & text(std::size_t row, const std::string & name) const { return cells.at(row).at(column(name)); }
};

inline TraceTable read_trace_csv(std::istream & is)
{
  TraceTable tab;
  std::string line;
  if (!std::getline(is, line)) { throw ConfigError("trace CSV: missing header"); }
  for (auto c : split(line, ',')) { tab.columns.emplace_back(c); }
  while (std::getline(is, line)) {
    if (line.empty()) { continue; }
    std::vector<std::string> row;
    for (auto c : split(line, ',')) { row.emplace_back(c); }
    if (row.size() != tab.columns.size()) {
      throw ConfigError("trace CSV: row " + std::to_string(tab.cells.size() + 1) + " has " + std::to_string(row.size()) + " fields");
    }
    tab.cells.push_back(std::move(row));
  }
  return tab;
}

}  // namespace idmpc

#endif  // IDMPC__TRACE_IO_HPP_
