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
#include <charconv>
#include <map>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "natgrad/cli.hpp"
#include "natgrad/discrete.hpp"
#include "natgrad/errors.hpp"
#include "natgrad/experiments.hpp"
#include "natgrad/linalg.hpp"
#include "natgrad/loss.hpp"
#include "natgrad/metric.hpp"

namespace natgrad::cli {

namespace {

using Meta = std::vector<std::pair<std::string, std::string>>;

struct Options {
  std::string command;
  std::string input;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<double> gamma;
  std::optional<std::size_t> m;
  bool svg = false;
  std::vector<std::string> sets;
};

std::string vector_text(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::string matrix_text(const Matrix& m) {
  std::string s;
  for (std::size_t i = 0; i < m.rows(); ++i) s += (i ? ";" : "") + vector_text(m.row(i));
  return s;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

// Resolved configuration for one command: defaults, then the config file,
// then --set, then the dedicated flags. Every value read is echoed.
class Settings {
 public:
  Settings(const std::string& command, std::set<std::string> allowed, const Options& opt)
      : allowed_(std::move(allowed)) {
    allowed_.insert("seed");
    if (!opt.config_path.empty()) {
      const ConfigMap file = parse_config_file(opt.config_path);
      for (const auto& [k, v] : file.values) {
        if (!allowed_.count(k))
          throw ConfigError(opt.config_path + ": line " + std::to_string(file.lines.at(k)) +
                            ": unknown key '" + k + "' for " + command);
        raw_[k] = v;
      }
    }
    for (const auto& s : opt.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      const std::string key = s.substr(0, eq);
      if (!allowed_.count(key)) throw ConfigError("unknown key '" + key + "' for " + command);
      raw_[key] = s.substr(eq + 1);
    }
    if (opt.seed) raw_["seed"] = std::to_string(*opt.seed);
    if (opt.gamma) override_flag("gamma", format_double(*opt.gamma), "--gamma", command);
    if (opt.m) override_flag("window_m", std::to_string(*opt.m), "--m", command);
  }

  std::string text(const std::string& key, const std::string& def) {
    const auto it = raw_.find(key);
    const std::string v = it == raw_.end() ? def : it->second;
    echo(key, v);
    return v;
  }

  std::optional<std::string> optional_text(const std::string& key) {
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    echo(key, it->second);
    return it->second;
  }

  double real(const std::string& key, double def) {
    const auto v = optional_real(key);
    if (v) return *v;
    echo(key, format_double(def));
    return def;
  }

  std::optional<double> optional_real(const std::string& key) {
    const auto t = optional_text(key);
    if (!t) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t->c_str(), &end);
    if (t->empty() || end != t->c_str() + t->size()) throw ConfigError(key + ": not a number: '" + *t + "'");
    return v;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
      echo(key, std::to_string(def));
      return def;
    }
    const std::string& t = it->second;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
      throw ConfigError(key + ": expected a non-negative integer, got '" + t + "'");
    echo(key, t);
    return v;
  }

  bool flag(const std::string& key, bool def) {
    const std::string t = text(key, bool_text(def));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + t + "'");
  }

  std::optional<Vector> vector(const std::string& key) {
    const auto t = optional_text(key);
    if (!t) return std::nullopt;
    try {
      return parse_vector(*t);
    } catch (const ParseError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

  std::optional<Matrix> matrix(const std::string& key) {
    const auto t = optional_text(key);
    if (!t) return std::nullopt;
    try {
      return parse_matrix(*t);
    } catch (const ParseError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

  const Meta& echoed() const { return echo_; }

 private:
  void override_flag(const std::string& key, const std::string& value, const char* flag,
                     const std::string& command) {
    if (!allowed_.count(key)) throw CLI::ValidationError(std::string(flag) + " does not apply to " + command);
    raw_[key] = value;
  }

  void echo(const std::string& key, const std::string& value) {
    for (auto& [k, v] : echo_)
      if (k == key) {
        v = value;
        return;
      }
    echo_.emplace_back(key, value);
  }

  std::set<std::string> allowed_;
  std::map<std::string, std::string> raw_;
  Meta echo_;
};

// Collects outputs for one run and writes the manifest last.
class Output {
 public:
  Output(const Options& opt, std::uint64_t seed) : opt_(opt), seed_(seed) {
    if (!opt.out.empty()) {
      dir_ = opt.out;
    } else if (const char* env = std::getenv("NATGRAD_LENS_OUT"); env && *env) {
      dir_ = env;
    } else {
      dir_ = "natgrad_lens_out";
    }
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw ConfigError("cannot create output directory " + dir_.string());
  }

  Meta meta(const Settings& s) const {
    Meta m{{"command", opt_.command}, {"seed", std::to_string(seed_)}};
    if (!opt_.config_path.empty()) m.emplace_back("config_path", opt_.config_path);
    for (const auto& [k, v] : s.echoed())
      if (k != "seed") m.emplace_back("config." + k, v);
    return m;
  }

  std::string table(const std::string& stem, const Table& t, const Settings& s) {
    const std::string name = stem + "." + opt_.format;
    write(name, opt_.format == "json" ? to_json(t, meta(s)) : to_csv(t, meta(s)));
    return name;
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic((dir_ / name).string(), content);
    files_.push_back(name);
  }

  void manifest(const Settings& s, const nlohmann::json& summary) {
    nlohmann::json config = nlohmann::json::object();
    for (const auto& [k, v] : s.echoed()) config[k] = v;
    nlohmann::json doc = {{"command", opt_.command},
                          {"config_path", opt_.config_path.empty() ? nlohmann::json(nullptr)
                                                                   : nlohmann::json(opt_.config_path)},
                          {"seed", seed_},
                          {"output_dir", dir_.string()},
                          {"format", opt_.format},
                          {"config", config},
                          {"files", files_},
                          {"summary", summary}};
    write_file_atomic((dir_ / "manifest.json").string(), doc.dump(2) + "\n");
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  const Options& opt_;
  std::uint64_t seed_;
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

Cell opt_cell(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(std::monostate{});
}

const std::vector<std::string> kSpectrumColumns = {"psi",       "norm_ratio", "gamma",
                                                   "lambda_min", "lambda_max", "lambda_bulk",
                                                   "kappa"};

// status, then kSpectrumColumns, for one pair.
std::vector<Cell> spectrum_cells(const UpdateGradientPair& pair, double gamma) {
  if (!pair.is_aligned()) {
    return {std::string("degenerate"), pair.psi(), pair.norm_ratio(), gamma,
            std::monostate{},          std::monostate{}, std::monostate{}, std::monostate{}};
  }
  const SpectrumReport s = closed_form_spectrum(pair, gamma);
  return {std::string("ok"), s.psi, s.norm_ratio, gamma, s.lambda_min, s.lambda_max,
          opt_cell(s.lambda_bulk), s.kappa};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Table trace_table(const TrajectoryTrace& trace, double gamma, std::size_t record_every,
                  const char* time_column) {
  Table t;
  t.columns = concat({"step", time_column, "loss", "status"}, kSpectrumColumns);
  t.columns.push_back("natgrad_residual");
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (k % record_every != 0 && k + 1 != trace.size()) continue;
    std::vector<Cell> row{static_cast<std::int64_t>(k), trace.times[k], trace.losses[k]};
    for (auto& c : spectrum_cells(trace.pairs[k], gamma)) row.push_back(std::move(c));
    row.emplace_back(std::isnan(trace.natgrad_residuals[k]) ? Cell(std::monostate{})
                                                            : Cell(trace.natgrad_residuals[k]));
    t.add_row(std::move(row));
  }
  return t;
}

void add_effectiveness(Table& t, std::vector<Cell>& row, const EffectivenessReport& e) {
  for (const char* c : {"window_m", "windowed_decrease_ok", "avg_loss_monotone_ok",
                        "instantaneous_monotone_ok", "violation_count",
                        "first_instantaneous_increase"})
    t.columns.emplace_back(c);
  row.emplace_back(static_cast<std::int64_t>(e.window_m));
  row.emplace_back(std::string(bool_text(e.windowed_decrease_ok)));
  row.emplace_back(std::string(bool_text(e.avg_loss_monotone_ok)));
  row.emplace_back(std::string(bool_text(e.instantaneous_monotone_ok)));
  row.emplace_back(static_cast<std::int64_t>(e.violation_count));
  row.emplace_back(e.first_instantaneous_increase
                       ? Cell(static_cast<std::int64_t>(*e.first_instantaneous_increase))
                       : Cell(std::monostate{}));
}

nlohmann::json effectiveness_json(const EffectivenessReport& e) {
  return {{"window_m", e.window_m},
          {"windowed_decrease_ok", e.windowed_decrease_ok},
          {"avg_loss_monotone_ok", e.avg_loss_monotone_ok},
          {"instantaneous_monotone_ok", e.instantaneous_monotone_ok},
          {"violation_count", e.violation_count},
          {"first_instantaneous_increase",
           e.first_instantaneous_increase ? nlohmann::json(*e.first_instantaneous_increase)
                                          : nlohmann::json(nullptr)}};
}

std::string trace_svg(const std::string& title, const TrajectoryTrace& trace, double gamma) {
  Vector lmin(trace.size(), NAN), lmax(trace.size(), NAN), kappa(trace.size(), NAN);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (!trace.pairs[k].is_aligned()) continue;
    const auto s = closed_form_spectrum(trace.pairs[k], gamma);
    lmin[k] = s.lambda_min;
    lmax[k] = s.lambda_max;
    kappa[k] = s.kappa;
  }
  return svg_line_chart(title, trace.times,
                        {{"lambda_max", lmax}, {"lambda_min", lmin}, {"kappa", kappa}}, true);
}

// ---------------------------------------------------------------------------

int cmd_analyze(const Options& opt, std::ostream& out) {
  Settings s("analyze", {"input", "gamma"}, opt);
  const std::uint64_t seed = s.count("seed", 0);
  const std::string input = opt.input.empty() ? s.text("input", "") : s.text("input", opt.input);
  if (input.empty()) throw ConfigError("analyze needs a pair file (positional argument or input=)");
  const double gamma = s.real("gamma", 1.0);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");

  const auto pairs = read_pairs_file(input);
  Table t;
  t.columns = concat({"row", "line", "dim", "status"}, kSpectrumColumns);
  t.columns.push_back("map_residual");
  std::size_t degenerate = 0, invalid = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& rec = pairs[i];
    std::vector<Cell> row{static_cast<std::int64_t>(i), static_cast<std::int64_t>(rec.line),
                          static_cast<std::int64_t>(rec.g.size())};
    try {
      const UpdateGradientPair pair(rec.g, rec.y);
      for (auto& c : spectrum_cells(pair, gamma)) row.push_back(std::move(c));
      if (pair.is_aligned()) {
        row.emplace_back(family_map_residual(pair, gamma));
      } else {
        row.emplace_back(std::monostate{});
        ++degenerate;
      }
    } catch (const InvalidInputError&) {
      row.emplace_back(std::string("invalid"));
      row.resize(t.columns.size());
      ++invalid;
    }
    t.add_row(std::move(row));
  }
  Output o(opt, seed);
  const std::string file = o.table("spectrum", t, s);
  o.manifest(s, {{"rows", pairs.size()}, {"degenerate", degenerate}, {"invalid", invalid}});
  out << "analyze: " << pairs.size() << " pairs, " << degenerate << " degenerate, " << invalid
      << " invalid -> " << (o.dir() / file).string() << '\n';
  return 0;
}

int cmd_lti(const Options& opt, std::ostream& out) {
  Settings s("lti", {"dim", "a", "theta0", "dt", "t_end", "window_m", "verify_every",
                     "record_every", "gamma"},
             opt);
  LtiConfig c;
  c.seed = s.count("seed", c.seed);
  c.a_matrix = s.matrix("a");
  c.dim = c.a_matrix ? c.a_matrix->rows() : s.count("dim", c.dim);
  c.theta0 = s.vector("theta0");
  c.dt = s.real("dt", c.dt);
  c.t_end = s.real("t_end", c.t_end);
  c.window_m = s.count("window_m", c.window_m);
  c.verify_every = s.count("verify_every", c.verify_every);
  const std::size_t record_every = std::max<std::uint64_t>(1, s.count("record_every", 1));
  const double gamma = s.real("gamma", 1.0);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");

  const LtiResult r = run_lti(c);
  Output o(opt, c.seed);
  o.table("trace", trace_table(r.trace, gamma, record_every, "time"), s);

  Table summary;
  std::vector<Cell> row;
  summary.columns = {"steps", "lyapunov_residual", "truncated", "note", "a", "p"};
  row = {static_cast<std::int64_t>(r.trace.size()), r.lyapunov_residual,
         std::string(bool_text(r.trace.truncated)), r.trace.note, matrix_text(r.a),
         matrix_text(r.p.matrix())};
  add_effectiveness(summary, row, r.trace.effectiveness);
  summary.add_row(std::move(row));
  o.table("summary", summary, s);
  if (opt.svg) o.write("spectrum.svg", trace_svg("LTI metric spectrum", r.trace, gamma));
  o.manifest(s, {{"steps", r.trace.size()},
                 {"lyapunov_residual", r.lyapunov_residual},
                 {"truncated", r.trace.truncated},
                 {"effectiveness", effectiveness_json(r.trace.effectiveness)}});
  out << "lti: " << r.trace.size() << " steps, windowed_decrease_ok="
      << bool_text(r.trace.effectiveness.windowed_decrease_ok) << " -> " << o.dir().string() << '\n';
  return 0;
}

int cmd_fa(const Options& opt, std::ostream& out) {
  Settings s("fa", {"input_dim", "hidden_dim", "output_dim", "dataset", "classes",
                    "samples_per_class", "cluster_spread", "digits_path", "learning_rate", "steps",
                    "window_m", "batch_size", "tanh_hidden", "feedback", "verify_every",
                    "record_every", "gamma"},
             opt);
  FaConfig c;
  c.seed = s.count("seed", c.seed);
  const std::string dataset = s.text("dataset", "synthetic");
  if (dataset == "synthetic") c.dataset = DatasetKind::kSynthetic;
  else if (dataset == "digits") c.dataset = DatasetKind::kDigits;
  else throw ConfigError("dataset must be synthetic or digits, got '" + dataset + "'");
  if (c.dataset == DatasetKind::kDigits) {
    c.input_dim = 64;
    c.output_dim = 10;
    c.classes = 10;
  }
  c.input_dim = s.count("input_dim", c.input_dim);
  c.hidden_dim = s.count("hidden_dim", c.hidden_dim);
  c.output_dim = s.count("output_dim", c.output_dim);
  c.classes = static_cast<int>(s.count("classes", static_cast<std::uint64_t>(c.classes)));
  c.samples_per_class = s.count("samples_per_class", c.samples_per_class);
  c.cluster_spread = s.real("cluster_spread", c.cluster_spread);
  c.digits_path = s.text("digits_path", c.digits_path);
  c.learning_rate = s.real("learning_rate", c.learning_rate);
  c.steps = s.count("steps", c.steps);
  c.window_m = s.count("window_m", c.window_m);
  c.batch_size = s.count("batch_size", c.batch_size);
  c.tanh_hidden = s.flag("tanh_hidden", c.tanh_hidden);
  const std::string feedback = s.text("feedback", "random");
  if (feedback == "random") c.feedback = FeedbackMode::kRandom;
  else if (feedback == "transpose") c.feedback = FeedbackMode::kTranspose;
  else throw ConfigError("feedback must be random or transpose, got '" + feedback + "'");
  c.verify_every = s.count("verify_every", c.verify_every);
  const std::size_t record_every = std::max<std::uint64_t>(1, s.count("record_every", 1));
  const double gamma = s.real("gamma", 1.0);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");

  const FaResult r = run_feedback_alignment(c);
  Output o(opt, c.seed);
  o.table("trace", trace_table(r.trace, gamma, record_every, "epoch"), s);

  Table summary;
  summary.columns = {"steps", "parameter_dim", "verified_steps", "verified_ok",
                     "max_map_residual", "truncated", "note"};
  std::vector<Cell> row{static_cast<std::int64_t>(r.trace.size()),
                        static_cast<std::int64_t>(r.parameter_dim),
                        static_cast<std::int64_t>(r.verified_steps),
                        static_cast<std::int64_t>(r.verified_ok), r.max_map_residual,
                        std::string(bool_text(r.trace.truncated)), r.trace.note};
  add_effectiveness(summary, row, r.trace.effectiveness);
  summary.add_row(std::move(row));
  o.table("effectiveness", summary, s);
  if (opt.svg) {
    o.write("spectrum.svg", trace_svg("Feedback alignment metric spectrum", r.trace, gamma));
    o.write("loss.svg", svg_line_chart("Feedback alignment loss", r.trace.times,
                                       {{"loss", r.trace.losses}}, true));
  }
  o.manifest(s, {{"steps", r.trace.size()},
                 {"parameter_dim", r.parameter_dim},
                 {"max_map_residual", r.max_map_residual},
                 {"effectiveness", effectiveness_json(r.trace.effectiveness)}});
  const auto& e = r.trace.effectiveness;
  out << "fa: " << r.trace.size() << " steps, windowed_decrease_ok="
      << bool_text(e.windowed_decrease_ok)
      << ", instantaneous_monotone_ok=" << bool_text(e.instantaneous_monotone_ok) << " -> "
      << o.dir().string() << '\n';
  return 0;
}

int cmd_discrete(const Options& opt, std::ostream& out) {
  Settings s("discrete", {"loss", "dim", "theta", "g", "eta", "h", "etas"}, opt);
  const std::uint64_t seed = s.count("seed", 0);
  const std::string loss_name = s.text("loss", "quartic");
  const bool planar = loss_name == "cosine_valley" || loss_name == "double_well";
  auto theta_in = s.vector("theta");
  const std::size_t dim = theta_in ? theta_in->size() : s.count("dim", 2);
  const LossOracle oracle = losses::by_name(loss_name, dim);
  const Vector theta = theta_in ? *theta_in : Vector(dim, planar ? 0.5 : 1.0);
  if (theta.size() != oracle.dim()) throw ConfigError("theta has the wrong length for " + loss_name);
  const Vector grad = oracle.gradient(theta);
  Vector g = s.vector("g").value_or(scaled(-1.0, grad));
  if (g.size() != dim) throw ConfigError("g has the wrong length");

  std::optional<double> h = s.optional_real("h");
  if (!h && oracle.curvature_floor() && *oracle.curvature_floor() < 0.0)
    h = -0.5 * *oracle.curvature_floor();
  if (h && !(*h > 0.0)) throw ConfigError("h must be positive");

  std::optional<double> eta = s.optional_real("eta");
  if (!eta) {
    // Largest step kept safely inside the certified bound: eta = 0.9 * bound(eta).
    eta = 0.1;
    if (h) {
      for (int it = 0; it < 20; ++it) {
        const auto r = discrete_gradient(oracle, DiscreteStep(theta, g, *eta));
        eta = 0.9 * max_learning_rate(r.y_bar, g, *h).certified;
      }
    }
    s.text("eta", format_double(*eta));
  }
  if (!(*eta > 0.0)) throw ConfigError("eta must be positive");
  if (h) s.text("h", format_double(*h));

  const DiscreteStep step(theta, g, *eta);
  const DiscreteGradientResult r = discrete_gradient(oracle, step);
  const Metric m_bar = build_discrete_metric(step, r.y_bar);
  const CombinedMetric combined = combined_metric(m_bar, r.hessian_mid, *eta);

  Table t;
  t.columns = {"loss", "dim", "eta", "lambda_taylor", "psi_bar", "loss_before", "loss_after",
               "taylor_residual", "identity_residual", "m_bar_lambda_min",
               "discrete_reconstruction_error", "combined_is_pd", "combined_min_eigenvalue",
               "combined_reconstruction_error", "h", "eta_bound_formula", "eta_bound_certified",
               "theta", "g", "y_bar"};
  std::vector<Cell> row{loss_name, static_cast<std::int64_t>(dim), *eta, r.lambda_taylor,
                        r.psi_bar, r.loss_before, r.loss_after, r.taylor_residual,
                        r.identity_residual, metric_eigenvalues(m_bar).front(),
                        discrete_reconstruction_error(step, m_bar.matrix(), r.y_bar),
                        std::string(bool_text(combined.is_pd)), combined.min_eigenvalue,
                        combined_reconstruction_error(combined, g, grad)};
  if (h) {
    const auto bound = max_learning_rate(r.y_bar, g, *h);
    row.insert(row.end(), {*h, bound.formula, bound.certified});
  } else {
    row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}});
  }
  row.insert(row.end(), {vector_text(theta), vector_text(g), vector_text(r.y_bar)});
  t.add_row(std::move(row));

  const Vector etas = s.vector("etas").value_or(Vector{1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
  const auto probe = continuum_limit_probe(
      oracle, theta, [&](std::span<const double>) { return g; }, etas);
  Table ct;
  ct.columns = {"eta", "effective", "y_bar_error", "eta_hg_norm", "m_bar_deviation",
                "m_bar_lambda_min", "m_bar_lambda_max"};
  for (const auto& p : probe) {
    const bool has = p.effective && !p.m_bar_spectrum.empty();
    ct.add_row({p.eta, std::string(bool_text(p.effective)), p.y_bar_error, p.eta_hg_norm,
                p.m_bar_deviation, has ? Cell(p.m_bar_spectrum.front()) : Cell(std::monostate{}),
                has ? Cell(p.m_bar_spectrum.back()) : Cell(std::monostate{})});
  }
  const double order = continuum_order(probe);

  Output o(opt, seed);
  o.table("discrete", t, s);
  o.table("continuum", ct, s);
  o.manifest(s, {{"lambda_taylor", r.lambda_taylor},
                 {"combined_is_pd", combined.is_pd},
                 {"continuum_order", std::isfinite(order) ? nlohmann::json(order) : nlohmann::json(nullptr)}});
  out << "discrete: " << loss_name << " eta=" << format_double(*eta)
      << " lambda=" << format_double(r.lambda_taylor) << " combined_is_pd=" << bool_text(combined.is_pd)
      << " continuum_order=" << format_double(order) << " -> " << o.dir().string() << '\n';
  return 0;
}

int cmd_effectiveness(const Options& opt, std::ostream& out) {
  Settings s("effectiveness", {"input", "window_m"}, opt);
  const std::uint64_t seed = s.count("seed", 0);
  const std::string input = opt.input.empty() ? s.text("input", "") : s.text("input", opt.input);
  if (input.empty()) throw ConfigError("effectiveness needs a loss file (positional argument or input=)");
  const std::size_t m = s.count("window_m", 1);
  const Vector losses = read_losses_file(input);
  const EffectivenessReport e = check_effectiveness(losses, m);

  Table t;
  std::vector<Cell> row{static_cast<std::int64_t>(losses.size())};
  t.columns = {"n"};
  add_effectiveness(t, row, e);
  t.add_row(std::move(row));
  Output o(opt, seed);
  o.table("effectiveness", t, s);
  if (opt.svg) {
    Vector x(losses.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    o.write("loss.svg", svg_line_chart("Loss", x, {{"loss", losses}}, false));
  }
  o.manifest(s, effectiveness_json(e));
  out << "effectiveness: n=" << losses.size() << " m=" << m
      << " windowed_decrease_ok=" << bool_text(e.windowed_decrease_ok)
      << " instantaneous_monotone_ok=" << bool_text(e.instantaneous_monotone_ok) << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Reconstruct and analyze the metric that casts a learning rule as natural gradient descent",
               "natgrad-lens"};
  app.add_option("command", opt.command, "analyze | lti | fa | discrete | effectiveness")
      ->required()
      ->check(CLI::IsMember({"analyze", "lti", "fa", "discrete", "effectiveness"}));
  app.add_option("input", opt.input, "Pair file (analyze) or loss file (effectiveness)");
  app.add_option("--config", opt.config_path, "Key-value config file");
  app.add_option("--seed", opt.seed, "Random seed");
  app.add_option("--out", opt.out, "Output directory (default $NATGRAD_LENS_OUT or ./natgrad_lens_out)");
  app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--gamma", opt.gamma, "Family parameter for reported spectra");
  app.add_option("--m", opt.m, "Effectiveness window");
  app.add_flag("--svg", opt.svg, "Also write an SVG line chart");
  app.add_option("--set", opt.sets, "Override one config key: key=value")->take_all();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (opt.command == "analyze") return cmd_analyze(opt, out);
    if (opt.command == "lti") return cmd_lti(opt, out);
    if (opt.command == "fa") return cmd_fa(opt, out);
    if (opt.command == "discrete") return cmd_discrete(opt, out);
    return cmd_effectiveness(opt, out);
  } catch (const CLI::ValidationError& e) {
    err << "natgrad-lens: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "natgrad-lens " << opt.command << ": error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace natgrad::cli
