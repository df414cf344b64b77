/* Copyright 2026 The natgrad-lens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

// Command-line front end and its file formats.
//
//   natgrad-lens <command> [input] [--config PATH] [--seed N] [--out DIR]
//                [--format csv|json] [--gamma X] [--m N] [--svg]
//                [--set key=value]...
//
// Commands: analyze, lti, fa, discrete, effectiveness. Output goes to
// --out, else $NATGRAD_LENS_OUT, else ./natgrad_lens_out.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "natgrad/matrix.hpp"

namespace natgrad::cli {

/// Runs one command. Returns the process exit status: 0 on success, 1 when
/// the command fails, 2 for usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Key-value configuration.

/// Ordered key -> value map with the line each key came from.
struct ConfigMap {
  std::map<std::string, std::string> values;
  std::map<std::string, std::size_t> lines;

  bool has(const std::string& key) const { return values.count(key) > 0; }
};

/// Parses `key = value` lines; `#` starts a comment. Throws ParseError on
/// a line without '=' or a repeated key.
ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_file(const std::string& path);

/// Comma separated doubles, e.g. "1, -2.5, 3e-4". Throws ParseError.
Vector parse_vector(const std::string& text);
/// Rows separated by ';', entries by ','. Throws ParseError.
Matrix parse_matrix(const std::string& text);

// ---------------------------------------------------------------------------
// Tables written as CSV or JSON.

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Shortest text that parses back to the same double (17 significant
/// digits); "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// CSV with `# key=value` comment lines for `meta` before the header.
std::string to_csv(const Table& t, const std::vector<std::pair<std::string, std::string>>& meta);
/// {"meta": {...}, "columns": [...], "rows": [{column: value}, ...]}.
/// Empty cells and non-finite doubles become null.
std::string to_json(const Table& t, const std::vector<std::pair<std::string, std::string>>& meta);

/// Reads either format back (JSON when the first non-blank byte is '{').
/// CSV cells that parse as integers become int64, other numbers double,
/// empty cells monostate. `meta` receives the metadata pairs when given.
Table read_table_file(const std::string& path,
                      std::vector<std::pair<std::string, std::string>>* meta = nullptr);

/// Numeric value of a cell (int64 widened); NaN for empty or text cells.
double cell_number(const Cell& c);

/// Writes `content` to a temporary file in the same directory and renames
/// it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// Inputs.

struct PairRecord {
  std::size_t line;  // 1-based source line (CSV) or entry index + 1 (JSON)
  Vector g;
  Vector y;
};

/// CSV with header dim,g_0..g_{D-1},y_0..y_{D-1}, or JSON: an array of
/// {"dim", "g", "y"} objects, optionally wrapped as {"pairs": [...]}.
std::vector<PairRecord> read_pairs_file(const std::string& path);
std::string pairs_to_csv(const std::vector<PairRecord>& pairs);
std::string pairs_to_json(const std::vector<PairRecord>& pairs);

/// One loss per line (an optional header `loss` and `#` comments allowed),
/// a CSV with a `loss` column, or JSON: an array or {"losses": [...]}.
Vector read_losses_file(const std::string& path);

/// Minimal SVG line chart, one polyline per series, sharing the x axis.
/// `log_y` plots log10 of the values; non-positive points are skipped.
std::string svg_line_chart(const std::string& title, std::span<const double> x,
                           const std::vector<std::pair<std::string, Vector>>& series,
                           bool log_y);

}  // namespace natgrad::cli
