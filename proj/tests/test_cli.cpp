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

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "natgrad/cli.hpp"
#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"
#include "natgrad/metric.hpp"
#include "natgrad/sampling.hpp"

using namespace natgrad;
using namespace natgrad::cli;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("natgrad_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    if (t.columns[j] == name) return j;
  FAIL("missing column " << name);
  return 0;
}

std::string text_cell(const Table& t, std::size_t row, const std::string& name) {
  const Cell& c = t.rows[row][column(t, name)];
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

double num_cell(const Table& t, std::size_t row, const std::string& name) {
  return cell_number(t.rows[row][column(t, name)]);
}

}  // namespace

TEST_CASE("format_double round-trips every double") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(same_bits(std::strtod(format_double(v).c_str(), nullptr), v));
  }
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("config parsing") {
  std::istringstream in("# comment\nseed = 7\n\nt_end=2.5  # trailing\n");
  const ConfigMap c = parse_config(in);
  CHECK(c.values.at("seed") == "7");
  CHECK(c.values.at("t_end") == "2.5");
  CHECK(c.lines.at("t_end") == 4);

  std::istringstream dup("a=1\na=2\n");
  try {
    parse_config(dup);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bare("a=1\njunk\n");
  CHECK_THROWS_AS(parse_config(bare), ParseError);

  CHECK(parse_vector("1, -2.5,3e-4") == Vector{1, -2.5, 3e-4});
  CHECK_THROWS_AS(parse_vector("1,x"), ParseError);
  CHECK_THROWS_AS(parse_vector(""), ParseError);
  const Matrix m = parse_matrix("1,2;3,4");
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == 3.0);
  CHECK_THROWS_AS(parse_matrix("1,2;3"), ParseError);
}

TEST_CASE("tables round-trip through CSV and JSON") {
  const fs::path dir = fresh_dir("tables");
  Table t;
  t.columns = {"i", "x", "s", "empty"};
  t.add_row({std::int64_t{3}, 0.1, std::string("a,\"b\""), std::monostate{}});
  t.add_row({std::int64_t{-1}, -1e-300, std::string("ok"), std::monostate{}});
  t.add_row({std::int64_t{0}, NAN, std::string("x"), std::monostate{}});
  CHECK_THROWS_AS(t.add_row({1.0}), DimensionError);
  const std::vector<std::pair<std::string, std::string>> meta{{"seed", "9"}, {"command", "test"}};

  for (const char* ext : {"csv", "json"}) {
    CAPTURE(ext);
    const std::string path = (dir / (std::string("t.") + ext)).string();
    write_file_atomic(path, std::string(ext) == "csv" ? to_csv(t, meta) : to_json(t, meta));
    std::vector<std::pair<std::string, std::string>> back_meta;
    const Table back = read_table_file(path, &back_meta);
    CHECK(back.columns == t.columns);
    REQUIRE(back.rows.size() == 3);
    CHECK(back_meta.size() == 2);
    CHECK(std::get<std::int64_t>(back.rows[0][0]) == 3);
    CHECK(same_bits(std::get<double>(back.rows[0][1]), 0.1));
    CHECK(same_bits(std::get<double>(back.rows[1][1]), -1e-300));
    CHECK(std::get<std::string>(back.rows[0][2]) == "a,\"b\"");
    CHECK(std::holds_alternative<std::monostate>(back.rows[1][3]));
    CHECK(std::isnan(cell_number(back.rows[2][1])));
  }
  CHECK(fs::directory_iterator(dir) != fs::directory_iterator());
  for (const auto& e : fs::directory_iterator(dir))
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

TEST_CASE("pair files round-trip and report malformed lines") {
  const fs::path dir = fresh_dir("pairs");
  Rng rng(12);
  std::vector<PairRecord> pairs;
  for (std::size_t i = 0; i < 10; ++i)
    pairs.push_back({0, random_normal_vector(rng, 3), random_normal_vector(rng, 3)});
  write_text(dir / "p.csv", pairs_to_csv(pairs));
  write_text(dir / "p.json", pairs_to_json(pairs));
  for (const char* name : {"p.csv", "p.json"}) {
    const auto back = read_pairs_file((dir / name).string());
    REQUIRE(back.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(back[i].g == pairs[i].g);
      CHECK(back[i].y == pairs[i].y);
    }
  }
  CHECK(read_pairs_file((dir / "p.csv").string())[0].line == 2);

  auto expect_line = [&](const std::string& content, std::size_t line) {
    write_text(dir / "bad.csv", content);
    try {
      read_pairs_file((dir / "bad.csv").string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_line("dim,g_0,g_1,y_0,y_1\n2,1,0,1,0\n2,1,zero,1,0\n", 3);
  expect_line("dim,g_0,g_1,y_0,y_1\n2,1,0,1\n", 2);
  expect_line("dim,g_0,y_1\n", 1);
  expect_line("# note\n\ndim,g_0,y_0\n3,1,1\n", 4);
  write_text(dir / "bad.json", "{\"pairs\": [{\"g\": [1], \"y\": [1, 2]}]}");
  CHECK_THROWS_AS(read_pairs_file((dir / "bad.json").string()), ParseError);
}

TEST_CASE("analyze: aligned, degenerate and invalid rows") {
  const fs::path dir = fresh_dir("analyze_small");
  write_text(dir / "p.csv",
             "dim,g_0,g_1,y_0,y_1\n2,1,0,1,0\n2,1,0,0,1\n2,0,0,1,1\n2,1,0,-1,0.5\n");
  const auto r = run_cli({"analyze", (dir / "p.csv").string(), "--out", (dir / "out").string()});
  CHECK(r.code == 0);
  const Table t = read_table_file((dir / "out" / "spectrum.csv").string());
  REQUIRE(t.rows.size() == 4);
  CHECK(text_cell(t, 0, "status") == "ok");
  CHECK(num_cell(t, 0, "kappa") == 1.0);
  CHECK(num_cell(t, 0, "lambda_min") == 1.0);
  CHECK(num_cell(t, 0, "lambda_max") == 1.0);
  CHECK(text_cell(t, 1, "status") == "degenerate");
  CHECK(num_cell(t, 1, "psi") == doctest::Approx(M_PI / 2));
  CHECK(std::isnan(num_cell(t, 1, "lambda_min")));
  CHECK(std::isnan(num_cell(t, 1, "kappa")));
  CHECK(text_cell(t, 2, "status") == "invalid");
  CHECK(text_cell(t, 3, "status") == "degenerate");
  CHECK(num_cell(t, 3, "psi") > M_PI / 2);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("analyze: 100 random pairs re-parse to the in-memory spectra") {
  const fs::path dir = fresh_dir("analyze_random");
  Rng rng(99);
  std::vector<PairRecord> pairs;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto p = random_aligned_pair(rng, 5);
    pairs.push_back({0, Vector(p.g().begin(), p.g().end()), Vector(p.y().begin(), p.y().end())});
  }
  write_text(dir / "p.csv", pairs_to_csv(pairs));
  for (const char* format : {"csv", "json"}) {
    CAPTURE(format);
    const fs::path out = dir / format;
    const auto r = run_cli({"analyze", (dir / "p.csv").string(), "--out", out.string(), "--format",
                            format, "--gamma", "2.5"});
    REQUIRE(r.code == 0);
    std::vector<std::pair<std::string, std::string>> meta;
    const Table t = read_table_file((out / (std::string("spectrum.") + format)).string(), &meta);
    REQUIRE(t.rows.size() == 100);
    CHECK(std::find(meta.begin(), meta.end(), std::pair<std::string, std::string>{"seed", "0"}) !=
          meta.end());
    for (std::size_t i = 0; i < 100; ++i) {
      const UpdateGradientPair pair(pairs[i].g, pairs[i].y);
      const auto s = closed_form_spectrum(pair, 2.5);
      CHECK(text_cell(t, i, "status") == "ok");
      CHECK(same_bits(num_cell(t, i, "lambda_min"), s.lambda_min));
      CHECK(same_bits(num_cell(t, i, "lambda_max"), s.lambda_max));
      CHECK(same_bits(num_cell(t, i, "lambda_bulk"), *s.lambda_bulk));
      CHECK(same_bits(num_cell(t, i, "kappa"), s.kappa));
      CHECK(same_bits(num_cell(t, i, "psi"), s.psi));
      CHECK(num_cell(t, i, "lambda_min") > 0.0);
      CHECK(num_cell(t, i, "lambda_min") <= num_cell(t, i, "lambda_bulk"));
      CHECK(num_cell(t, i, "lambda_bulk") <= num_cell(t, i, "lambda_max"));
      CHECK(num_cell(t, i, "map_residual") <= 1e-10);
    }
  }
}

TEST_CASE("lti with A = -I has a constant unit spectrum") {
  const fs::path dir = fresh_dir("lti");
  write_text(dir / "lti.cfg", "a = -1,0,0;0,-1,0;0,0,-1\nt_end = 2\ntheta0 = 1,-2,0.5\n");
  const auto r = run_cli({"lti", "--config", (dir / "lti.cfg").string(), "--out",
                          (dir / "out").string(), "--format", "json", "--svg"});
  REQUIRE(r.code == 0);
  const Table t = read_table_file((dir / "out" / "trace.json").string());
  CHECK(t.rows.size() == 2001);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(num_cell(t, i, "lambda_min") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(num_cell(t, i, "lambda_max") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(num_cell(t, i, "lambda_bulk") == doctest::Approx(1.0).epsilon(1e-12));
  }
  LtiConfig c;
  c.a_matrix = parse_matrix("-1,0,0;0,-1,0;0,0,-1");
  c.dim = 3;
  c.t_end = 2;
  c.theta0 = Vector{1, -2, 0.5};
  const LtiResult direct = run_lti(c);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(same_bits(num_cell(t, i, "loss"), direct.trace.losses[i]));
    CHECK(same_bits(num_cell(t, i, "time"), direct.trace.times[i]));
  }
  std::ifstream svg(dir / "out" / "spectrum.svg");
  std::string head;
  std::getline(svg, head);
  CHECK(head.rfind("<svg", 0) == 0);
}

TEST_CASE("fa outputs match a direct run") {
  const fs::path dir = fresh_dir("fa");
  write_text(dir / "fa.cfg",
             "input_dim = 8\nhidden_dim = 4\nsamples_per_class = 20\nsteps = 120\n"
             "window_m = 10\nlearning_rate = 0.01\nbatch_size = 10\nseed = 1\n");
  const auto r = run_cli({"fa", "--config", (dir / "fa.cfg").string(), "--seed", "3", "--out",
                          (dir / "out").string()});
  REQUIRE(r.code == 0);
  std::vector<std::pair<std::string, std::string>> meta;
  const Table t = read_table_file((dir / "out" / "trace.csv").string(), &meta);
  CHECK(std::find(meta.begin(), meta.end(), std::pair<std::string, std::string>{"seed", "3"}) !=
        meta.end());

  FaConfig c;
  c.seed = 3;
  c.input_dim = 8;
  c.hidden_dim = 4;
  c.samples_per_class = 20;
  c.steps = 120;
  c.window_m = 10;
  c.learning_rate = 0.01;
  c.batch_size = 10;
  const FaResult direct = run_feedback_alignment(c);
  REQUIRE(t.rows.size() == direct.trace.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(same_bits(num_cell(t, i, "loss"), direct.trace.losses[i]));
    if (direct.trace.spectra[i]) CHECK(same_bits(num_cell(t, i, "kappa"), direct.trace.spectra[i]->kappa));
  }
  const Table e = read_table_file((dir / "out" / "effectiveness.csv").string());
  CHECK(text_cell(e, 0, "windowed_decrease_ok") ==
        (direct.trace.effectiveness.windowed_decrease_ok ? "true" : "false"));
}

TEST_CASE("fa default configuration is windowed-effective") {
  const fs::path dir = fresh_dir("fa_default");
  const auto r = run_cli({"fa", "--out", dir.string(), "--set", "record_every=50"});
  REQUIRE(r.code == 0);
  const Table e = read_table_file((dir / "effectiveness.csv").string());
  CHECK(text_cell(e, 0, "windowed_decrease_ok") == "true");
  CHECK(text_cell(e, 0, "instantaneous_monotone_ok") == "false");
}

TEST_CASE("effectiveness on the seven-point sequence") {
  const fs::path dir = fresh_dir("effectiveness");
  write_text(dir / "l.csv", "step,loss\n0,1.0\n1,1.2\n2,0.8\n3,1.0\n4,0.6\n5,0.8\n6,0.4\n");
  const auto r = run_cli({"effectiveness", (dir / "l.csv").string(), "--m", "2", "--out",
                          (dir / "out").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  const Table t = read_table_file((dir / "out" / "effectiveness.json").string());
  CHECK(text_cell(t, 0, "windowed_decrease_ok") == "true");
  CHECK(text_cell(t, 0, "instantaneous_monotone_ok") == "false");
  CHECK(num_cell(t, 0, "n") == 7);
  CHECK(read_losses_file((dir / "l.csv").string()).size() == 7);
  write_text(dir / "plain.txt", "# trace\n3\n2\n1\n");
  CHECK(read_losses_file((dir / "plain.txt").string()) == Vector{3, 2, 1});
  write_text(dir / "l.json", "[3, 2.5, 1]");
  CHECK(read_losses_file((dir / "l.json").string()) == Vector{3, 2.5, 1});
}

TEST_CASE("discrete command reports a positive definite combined metric") {
  const fs::path dir = fresh_dir("discrete");
  const auto r = run_cli({"discrete", "--set", "loss=double_well", "--set", "theta=0.3,1",
                          "--out", dir.string()});
  REQUIRE(r.code == 0);
  const Table t = read_table_file((dir / "discrete.csv").string());
  CHECK(text_cell(t, 0, "combined_is_pd") == "true");
  CHECK(num_cell(t, 0, "eta") < num_cell(t, 0, "eta_bound_certified"));
  CHECK(num_cell(t, 0, "combined_reconstruction_error") <= 1e-8);
  const Table c = read_table_file((dir / "continuum.csv").string());
  CHECK(c.rows.size() == 5);

  const auto uphill = run_cli({"discrete", "--set", "loss=quadratic", "--set", "g=1,1", "--set",
                               "eta=0.1", "--out", dir.string()});
  CHECK(uphill.code == 1);
}

TEST_CASE("output directory, precedence and error statuses") {
  const fs::path dir = fresh_dir("errors");
  write_text(dir / "l.txt", "3\n2\n1\n");
  setenv("NATGRAD_LENS_OUT", (dir / "env_out").string().c_str(), 1);
  CHECK(run_cli({"effectiveness", (dir / "l.txt").string()}).code == 0);
  CHECK(fs::exists(dir / "env_out" / "effectiveness.csv"));
  unsetenv("NATGRAD_LENS_OUT");

  // file < --set < dedicated flag
  write_text(dir / "e.cfg", "window_m = 1\n");
  CHECK(run_cli({"effectiveness", (dir / "l.txt").string(), "--config", (dir / "e.cfg").string(),
                 "--set", "window_m=2", "--out", (dir / "p").string()})
            .code == 0);
  CHECK(num_cell(read_table_file((dir / "p" / "effectiveness.csv").string()), 0, "window_m") == 2);
  CHECK(run_cli({"effectiveness", (dir / "l.txt").string(), "--config", (dir / "e.cfg").string(),
                 "--set", "window_m=2", "--m", "1", "--out", (dir / "p").string()})
            .code == 0);
  CHECK(num_cell(read_table_file((dir / "p" / "effectiveness.csv").string()), 0, "window_m") == 1);

  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"bogus"}).code == 2);
  CHECK(run_cli({"lti", "--format", "xml"}).code == 2);
  CHECK(run_cli({"effectiveness", (dir / "l.txt").string(), "--gamma", "2"}).code == 2);
  CHECK(run_cli({"fa", "--set", "nope=1", "--out", dir.string()}).code == 1);
  CHECK(run_cli({"analyze", "--out", dir.string()}).code == 1);
  CHECK(run_cli({"analyze", (dir / "missing.csv").string(), "--out", dir.string()}).code == 1);
  write_text(dir / "bad.csv", "dim,g_0,y_0\n1,1,1\n1,1\n");
  const auto bad = run_cli({"analyze", (dir / "bad.csv").string(), "--out", dir.string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 3") != std::string::npos);
  write_text(dir / "bad.cfg", "t_end = soon\n");
  CHECK(run_cli({"lti", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}).code == 1);
  CHECK(run_cli({"effectiveness", (dir / "l.txt").string(), "--m", "5", "--out", dir.string()})
            .code == 1);
  CHECK(run_cli({"--help"}).code == 0);
}
