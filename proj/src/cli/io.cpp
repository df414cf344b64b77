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

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "natgrad/cli.hpp"
#include "natgrad/errors.hpp"

namespace natgrad::cli {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Splits one CSV record, honouring double quotes.
std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quote");
  out.push_back(cur);
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::optional<double> to_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

double require_double(const std::string& text, std::size_t line, const std::string& what) {
  const auto v = to_double(text);
  if (!v) throw ParseError(line, what + ": not a number: '" + trim(text) + "'");
  return *v;
}

Cell parse_cell(const std::string& text) {
  if (text.empty()) return std::monostate{};
  std::int64_t i = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ec == std::errc() && p == text.data() + text.size()) return i;
  if (const auto d = to_double(text)) return *d;
  return text;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_json(const std::string& content) {
  const auto pos = content.find_first_not_of(" \t\r\n");
  return pos != std::string::npos && (content[pos] == '{' || content[pos] == '[');
}

json parse_json(const std::string& content, const std::string& path) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

Vector json_vector(const json& j, std::size_t entry, const char* field) {
  if (!j.contains(field) || !j[field].is_array())
    throw ParseError(entry, std::string("missing array '") + field + "'");
  Vector v;
  for (const auto& x : j[field]) {
    if (x.is_null()) {
      v.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (x.is_number()) {
      v.push_back(x.get<double>());
    } else {
      throw ParseError(entry, std::string("non-numeric entry in '") + field + "'");
    }
  }
  return v;
}

json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return json(*i);
  if (const auto* s = std::get_if<std::string>(&c)) return json(*s);
  return json(nullptr);
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
  return {};
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (cfg.has(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    cfg.values[key] = trim(body.substr(eq + 1));
    cfg.lines[key] = line_no;
  }
  return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return parse_config(in);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Vector parse_vector(const std::string& text) {
  if (trim(text).empty()) throw ParseError(0, "empty vector");
  Vector v;
  for (const auto& part : split(text, ',')) v.push_back(require_double(part, 0, "vector entry"));
  return v;
}

Matrix parse_matrix(const std::string& text) {
  std::vector<Vector> rows;
  for (const auto& part : split(text, ';')) rows.push_back(parse_vector(part));
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ParseError(0, "ragged matrix rows");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

// ---------------------------------------------------------------------------

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw DimensionError("Table: row width differs from columns");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double cell_number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::numeric_limits<double>::quiet_NaN();
}

std::string to_csv(const Table& t, const std::vector<std::pair<std::string, std::string>>& meta) {
  std::ostringstream os;
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
  for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << csv_escape(t.columns[j]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << cell_text(row[j]);
    os << '\n';
  }
  return os.str();
}

std::string to_json(const Table& t, const std::vector<std::pair<std::string, std::string>>& meta) {
  json m = json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t j = 0; j < row.size(); ++j) r[t.columns[j]] = cell_json(row[j]);
    rows.push_back(std::move(r));
  }
  json doc = {{"meta", m}, {"columns", t.columns}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

Table read_table_file(const std::string& path,
                      std::vector<std::pair<std::string, std::string>>* meta) {
  const std::string content = read_all(path);
  Table t;
  if (looks_like_json(content)) {
    const json doc = parse_json(content, path);
    if (!doc.contains("columns") || !doc.contains("rows")) throw ParseError(0, path + ": not a table");
    t.columns = doc["columns"].get<std::vector<std::string>>();
    if (meta && doc.contains("meta"))
      for (const auto& [k, v] : doc["meta"].items()) meta->emplace_back(k, v.get<std::string>());
    std::size_t index = 0;
    for (const auto& r : doc["rows"]) {
      ++index;
      std::vector<Cell> row;
      for (const auto& col : t.columns) {
        if (!r.contains(col)) throw ParseError(index, "row lacks column '" + col + "'");
        const json& v = r[col];
        if (v.is_null()) row.emplace_back(std::monostate{});
        else if (v.is_number_integer()) row.emplace_back(v.get<std::int64_t>());
        else if (v.is_number()) row.emplace_back(v.get<double>());
        else if (v.is_string()) row.emplace_back(v.get<std::string>());
        else if (v.is_boolean()) row.emplace_back(std::string(v.get<bool>() ? "true" : "false"));
        else throw ParseError(index, "unsupported value in column '" + col + "'");
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line.rfind("# ", 0) == 0 || line[0] == '#') {
      if (meta && !have_header) {
        const std::string body = trim(line.substr(1));
        const auto eq = body.find('=');
        if (eq != std::string::npos) meta->emplace_back(body.substr(0, eq), body.substr(eq + 1));
      }
      continue;
    }
    auto cells = split_csv(line, line_no);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ParseError(line_no, "expected " + std::to_string(t.columns.size()) + " cells, got " +
                                    std::to_string(cells.size()));
    std::vector<Cell> row;
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(0, path + ": no header");
  return t;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  const std::filesystem::path target(path);
  const std::filesystem::path tmp =
      target.parent_path() /
      (target.filename().string() + ".tmp" + std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot move output into place at " + path + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------

std::vector<PairRecord> read_pairs_file(const std::string& path) {
  const std::string content = read_all(path);
  std::vector<PairRecord> pairs;
  if (looks_like_json(content)) {
    const json doc = parse_json(content, path);
    const json& list = doc.is_object() && doc.contains("pairs") ? doc["pairs"] : doc;
    if (!list.is_array()) throw ParseError(0, path + ": expected an array of pairs");
    std::size_t index = 0;
    for (const auto& entry : list) {
      ++index;
      if (!entry.is_object()) throw ParseError(index, "pair entry is not an object");
      PairRecord r{index, json_vector(entry, index, "g"), json_vector(entry, index, "y")};
      if (r.g.size() != r.y.size()) throw ParseError(index, "g and y differ in length");
      if (r.g.empty()) throw ParseError(index, "empty pair");
      if (entry.contains("dim") && entry["dim"].get<std::size_t>() != r.g.size())
        throw ParseError(index, "dim does not match the vectors");
      pairs.push_back(std::move(r));
    }
    return pairs;
  }

  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto cells = split_csv(line, line_no);
    if (dim == 0) {
      if (cells.size() < 3 || cells.size() % 2 == 0 || trim(cells[0]) != "dim")
        throw ParseError(line_no, "header must be dim,g_0..g_{D-1},y_0..y_{D-1}");
      dim = (cells.size() - 1) / 2;
      for (std::size_t i = 0; i < dim; ++i) {
        if (trim(cells[1 + i]) != "g_" + std::to_string(i) ||
            trim(cells[1 + dim + i]) != "y_" + std::to_string(i))
          throw ParseError(line_no, "header must be dim,g_0..g_{D-1},y_0..y_{D-1}");
      }
      continue;
    }
    if (cells.size() != 1 + 2 * dim)
      throw ParseError(line_no, "expected " + std::to_string(1 + 2 * dim) + " cells, got " +
                                    std::to_string(cells.size()));
    const double d = require_double(cells[0], line_no, "dim");
    if (d != static_cast<double>(dim)) throw ParseError(line_no, "dim does not match the header");
    PairRecord r{line_no, Vector(dim), Vector(dim)};
    for (std::size_t i = 0; i < dim; ++i) {
      r.g[i] = require_double(cells[1 + i], line_no, "g_" + std::to_string(i));
      r.y[i] = require_double(cells[1 + dim + i], line_no, "y_" + std::to_string(i));
    }
    pairs.push_back(std::move(r));
  }
  if (dim == 0) throw ParseError(0, path + ": no header");
  return pairs;
}

std::string pairs_to_csv(const std::vector<PairRecord>& pairs) {
  if (pairs.empty()) throw InvalidInputError("pairs_to_csv: no pairs");
  const std::size_t d = pairs.front().g.size();
  std::ostringstream os;
  os << "dim";
  for (std::size_t i = 0; i < d; ++i) os << ",g_" << i;
  for (std::size_t i = 0; i < d; ++i) os << ",y_" << i;
  os << '\n';
  for (const auto& p : pairs) {
    if (p.g.size() != d || p.y.size() != d) throw DimensionError("pairs_to_csv: mixed dimensions");
    os << d;
    for (double v : p.g) os << ',' << format_double(v);
    for (double v : p.y) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::string pairs_to_json(const std::vector<PairRecord>& pairs) {
  json list = json::array();
  for (const auto& p : pairs) list.push_back({{"dim", p.g.size()}, {"g", p.g}, {"y", p.y}});
  return json({{"pairs", list}}).dump(2) + "\n";
}

Vector read_losses_file(const std::string& path) {
  const std::string content = read_all(path);
  Vector out;
  if (looks_like_json(content)) {
    const json doc = parse_json(content, path);
    const json& list = doc.is_object() && doc.contains("losses") ? doc["losses"] : doc;
    if (!list.is_array()) throw ParseError(0, path + ": expected an array of losses");
    std::size_t index = 0;
    for (const auto& v : list) {
      ++index;
      if (!v.is_number()) throw ParseError(index, "loss is not a number");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_csv(t, line_no);
    if (!column) {
      if (cells.size() == 1 && to_double(cells[0])) {
        column = 0;
      } else {
        for (std::size_t j = 0; j < cells.size(); ++j)
          if (trim(cells[j]) == "loss") column = j;
        if (!column) {
          if (cells.size() != 1) throw ParseError(line_no, "no 'loss' column in header");
          column = 0;
        }
        continue;
      }
    }
    if (*column >= cells.size()) throw ParseError(line_no, "missing loss cell");
    out.push_back(require_double(cells[*column], line_no, "loss"));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string svg_line_chart(const std::string& title, std::span<const double> x,
                           const std::vector<std::pair<std::string, Vector>>& series,
                           bool log_y) {
  constexpr double kWidth = 720, kHeight = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  static const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& [name, ys] : series) {
    if (ys.size() != x.size()) throw DimensionError("svg_line_chart: series length differs from x");
    for (double v : ys)
      if (usable(v)) {
        ymin = std::min(ymin, ty(v));
        ymax = std::max(ymax, ty(v));
      }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (!(ymax > ymin)) ymin -= 0.5, ymax += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - (ty(v) - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  os << "<path d=\"M" << kLeft << ' ' << kTop << " V" << kTop + ph << " H" << kLeft + pw
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto label = [&](double lx, double ly, const std::string& text, const char* anchor) {
    os << "<text x=\"" << lx << "\" y=\"" << ly << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(text) << "</text>\n";
  };
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  label(kLeft, kTop + ph + 16, fmt(xmin), "middle");
  label(kLeft + pw, kTop + ph + 16, fmt(xmax), "middle");
  label(kLeft - 6, kTop + ph, log_y ? "1e" + fmt(ymin) : fmt(ymin), "end");
  label(kLeft - 6, kTop + 10, log_y ? "1e" + fmt(ymax) : fmt(ymax), "end");

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, ys] = series[s];
    const char* colour = kColours[s % std::size(kColours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!usable(ys[i]) || !std::isfinite(x[i])) continue;
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", first ? "" : " ", px(x[i]), py(ys[i]));
      os << buf;
      first = false;
    }
    os << "\"/>\n";
    label(kLeft + pw - 4, kTop + 14 + 14 * static_cast<double>(s), name, "end");
    os << "<rect x=\"" << kLeft + pw - 2 << "\" y=\"" << kTop + 5 + 14 * static_cast<double>(s)
       << "\" width=\"10\" height=\"10\" fill=\"" << colour << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace natgrad::cli
