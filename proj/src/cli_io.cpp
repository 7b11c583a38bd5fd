#include "swl/cli_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace swl {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (trim(v.substr(pos)) != "") throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  if (trim(v.substr(pos)) != "") throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

// Writes via <path>.tmp and a rename so a reader never sees a half-written file.
void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path.string());
  }
}

std::string manifest_json(const RunManifest& m) {
  json j;
  j["version"] = m.version;
  j["timestamp"] = m.timestamp;
  j["status"] = m.failed ? "failed" : "ok";
  j["config"] = m.config;
  j["checks"] = json::array();
  for (const auto& [name, ok] : m.checks) j["checks"].push_back({{"name", name}, {"pass", ok}});
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds{"verify-identities", "verify-hardy", "verify-carleman",
                                             "solve",             "observability", "sweep"};
  return cmds;
}

void set_config_value(RunConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), v = trim(value_in);
  if (key == "command") {
    cfg.command = v;
  } else if (key == "n") {
    cfg.n = static_cast<int>(parse_int(key, v));
    if (cfg.n == 2) throw ConfigError("n = 2 excluded by Theorem hypotheses");
  } else if (key == "kappa") {
    cfg.kappa = parse_double(key, v);
    if (!(cfg.kappa > -0.5 && cfg.kappa < 0.0)) throw ConfigError("κ must lie in (−1/2, 0)");
  } else if (key == "T") {
    cfg.T = parse_double(key, v);
  } else if (key == "n_r" || key == "nr") {
    cfg.n_r = static_cast<int>(parse_int(key, v));
  } else if (key == "n_t" || key == "nt") {
    cfg.n_t = static_cast<int>(parse_int(key, v));
  } else if (key == "grading" || key == "p") {
    cfg.grading = parse_double(key, v);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, v);
  } else if (key == "lambda_grid") {
    cfg.lambda_grid = parse_list(key, v);
  } else if (key == "T_list") {
    cfg.T_list = parse_list(key, v);
  } else if (key == "eps_seq") {
    cfg.eps_seq = parse_list(key, v);
  } else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) throw ConfigError("config: seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "corpus") {
    cfg.corpus = v;
  } else if (key == "equation") {
    cfg.equation = v;
  } else if (key == "seeds") {
    cfg.seeds = static_cast<int>(parse_int(key, v));
  } else if (key == "obs_grading") {
    cfg.obs_grading = parse_double(key, v);
  } else if (key == "out") {
    cfg.out = v;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

std::string serialize(const RunConfig& c) {
  std::ostringstream os;
  os << "command = " << c.command << "\n"
     << "n = " << c.n << "\n"
     << "kappa = " << num(c.kappa) << "\n"
     << "T = " << num(c.T) << "\n"
     << "n_r = " << c.n_r << "\n"
     << "n_t = " << c.n_t << "\n"
     << "grading = " << num(c.grading) << "\n"
     << "epsilon = " << num(c.epsilon) << "\n"
     << "lambda_grid = " << join(c.lambda_grid) << "\n"
     << "T_list = " << join(c.T_list) << "\n"
     << "eps_seq = " << join(c.eps_seq) << "\n"
     << "seed = " << c.seed << "\n"
     << "corpus = " << c.corpus << "\n"
     << "equation = " << c.equation << "\n"
     << "seeds = " << c.seeds << "\n"
     << "obs_grading = " << num(c.obs_grading) << "\n"
     << "out = " << c.out << "\n";
  return os.str();
}

void validate(const RunConfig& c) {
  bool known = false;
  for (const auto& k : known_commands()) known = known || (k == c.command);
  if (!known) throw ConfigError("unknown command '" + c.command + "'");
  Params p;
  p.n = c.n;
  p.kappa = c.kappa;
  p.T = c.T;
  validate(p);
  if (c.n_r < 16) throw ConfigError("n_r must be >= 16");
  if (c.n_t < 0 || (c.n_t > 0 && c.n_t < 8)) throw ConfigError("n_t must be 0 (= n_r) or >= 8");
  if (!(c.grading >= 1.0) || !(c.obs_grading >= 1.0)) throw ConfigError("grading must be >= 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 1/2)");
  for (double e : c.eps_seq) {
    if (!(e > 0.0 && e < 0.5)) throw ConfigError("eps_seq entries must lie in (0, 1/2)");
  }
  if (c.command == "verify-identities" || c.command == "verify-hardy") {
    // The coarsest refinement level must resolve the truncated shell.
    const int coarse = (c.command == "verify-identities") ? c.n_r / 4 : c.n_r;
    const RadialGrid g = build_radial_grid(coarse, c.grading, c.n);
    if (!(g.r(0) < c.epsilon && g.r(g.size() - 1) > 1.0 - c.epsilon)) {
      char msg[96];
      std::snprintf(msg, sizeof msg, "n_r = %d too coarse to resolve epsilon = %g", c.n_r, c.epsilon);
      throw ConfigError(msg);
    }
  }
  if (c.command == "verify-carleman" || c.command == "sweep") {
    if (c.lambda_grid.empty()) throw ConfigError("lambda_grid must not be empty");
    for (std::size_t i = 0; i < c.lambda_grid.size(); ++i) {
      if (!(c.lambda_grid[i] > 0.0)) throw ConfigError("lambda_grid entries must be positive");
      if (i && !(c.lambda_grid[i] > c.lambda_grid[i - 1])) {
        throw ConfigError("lambda_grid must be increasing");
      }
    }
  }
  for (double T : c.T_list) {
    if (!(T > 0.0)) throw ConfigError("T_list entries must be positive");
  }
  if (c.corpus != "standard" && c.corpus != "solver" && c.corpus != "neumann" && c.corpus != "zero") {
    throw ConfigError("unknown corpus '" + c.corpus + "'");
  }
  if (c.equation != "demo" && c.equation != "free" && c.equation != "twisted") {
    throw ConfigError("unknown equation '" + c.equation + "'");
  }
  if (c.seeds < 1) throw ConfigError("seeds must be >= 1");
  if (c.out.empty()) throw ConfigError("out must name a directory");
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

std::string to_csv(const ReportTable& t) {
  std::string out = "# swl-csv v" + std::to_string(kCsvSchemaVersion) + " " + t.name + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw std::logic_error("report row width mismatch in " + t.name);
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += "\n";
  }
  return out;
}

std::vector<std::string> write_reports(const std::vector<ReportTable>& tables, RunManifest manifest,
                                       const std::string& outdir) {
  const fs::path dir(outdir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + outdir);
  if (manifest.timestamp.empty()) manifest.timestamp = utc_timestamp();

  std::vector<std::string> written;
  try {
    for (const ReportTable& t : tables) {
      if (t.rows.empty()) continue;
      write_atomic(dir / (t.name + ".csv"), to_csv(t));
      written.push_back(t.name + ".csv");
      std::string lines;
      for (const auto& row : t.rows) {
        json j = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) j[t.columns[i]] = cell_json(row[i]);
        lines += j.dump() + "\n";
      }
      write_atomic(dir / (t.name + ".jsonl"), lines);
      written.push_back(t.name + ".jsonl");
    }
    manifest.files = written;
    write_atomic(dir / "manifest.json", manifest_json(manifest));
  } catch (...) {
    for (const auto& f : written) fs::remove(dir / f, ec);
    manifest.failed = true;
    manifest.files.clear();
    try {
      write_atomic(dir / "manifest.json", manifest_json(manifest));
    } catch (...) {
    }
    throw;
  }
  written.push_back("manifest.json");
  return written;
}

namespace {

Params params_of(const RunConfig& c) {
  Params p;
  p.n = c.n;
  p.kappa = c.kappa;
  p.T = c.T;
  return p;
}

Grids grids_of(const RunConfig& c) {
  return Grids{build_radial_grid(c.n_r, c.grading, c.n), build_time_grid(c.T, c.time_nodes())};
}

EquationSpec equation_of(const RunConfig& c) {
  if (c.equation == "demo") return demo_equation();
  if (c.equation == "twisted") return twisted_equation(params_of(c));
  return EquationSpec{};
}

std::vector<std::string> identity_columns() {
  return {"schema", "n", "kappa", "config", "name", "lhs", "rhs", "residual", "relative_residual",
          "slack", "refinement_order", "vacuous", "divergent", "pass"};
}

std::vector<Cell> identity_row(const RunConfig& c, const std::string& config, const IdentityReport& r) {
  return {static_cast<long long>(kCsvSchemaVersion),
          static_cast<long long>(c.n),
          c.kappa,
          config,
          r.name,
          r.lhs,
          r.rhs,
          r.residual,
          r.relative_residual,
          r.slack,
          r.refinement_order ? *r.refinement_order : std::nan(""),
          r.vacuous,
          r.divergent,
          r.pass};
}

const std::vector<std::string> kCarlemanTerms{"boundary", "box_sq",    "dt_sq",      "angular_sq",
                                              "Dr_sq",    "weighted_u2", "extra_u2",
                                              "lambda3_coefficient"};

struct Outcome {
  std::vector<ReportTable> tables;
  std::vector<std::pair<std::string, bool>> checks;
};

Outcome run_identities(const RunConfig& c) {
  SuiteOptions so;
  so.n_list = {c.n};
  so.kappa_list = {c.kappa};
  so.refinement = {c.n_r / 4, c.n_r / 2, c.n_r};
  so.T = c.T;
  so.epsilon = c.epsilon;
  so.eps_sequence = c.eps_seq;
  so.seed = c.seed;
  const SuiteResult res = run_identity_suite(so);
  ReportTable t{"identities", identity_columns(), {}};
  for (const SuiteEntry& e : res.entries) t.rows.push_back(identity_row(c, e.config, e.report));
  return {{t}, {{"identity_suite", res.pass}}};
}

Outcome run_hardy(const RunConfig& c) {
  const Params p = params_of(c);
  const Grids g = grids_of(c);
  const TruncationSpec tr{c.epsilon};
  ReportTable t{"hardy", identity_columns(), {}};
  bool ok = true;
  for (const NamedField& f : sample_corpus(p, g, c.seed)) {
    for (double q : {1.0, 2.0 * p.kappa, 4.0 * p.kappa + 1.0}) {
      const IdentityReport r = check_hardy_pointwise(f.field, q, tr, g, p);
      ok = ok && r.pass;
      t.rows.push_back(identity_row(c, f.name + ",q=" + num(q), r));
    }
    const IdentityReport r = check_integrated_hardy(f.field, -p.T, p.T, g, p);
    ok = ok && r.pass;
    t.rows.push_back(identity_row(c, f.name, r));
  }
  return {{t}, {{"hardy", ok}}};
}

Outcome run_sweep(const RunConfig& c, const std::vector<std::string>& kinds) {
  Params p = params_of(c);
  p.c = select_c(p.n, p.kappa, p.T);
  const Grids g = grids_of(c);
  std::vector<NamedField> corpus;
  for (const auto& k : kinds) {
    for (NamedField& f : build_corpus(k, p, g, c.seed)) corpus.push_back(std::move(f));
  }
  const SweepResult res = run_carleman_sweep(corpus, p, g, c.lambda_grid);

  std::vector<std::string> cols{"schema", "n", "kappa", "c", "T", "field", "lambda"};
  for (const auto& k : kCarlemanTerms) cols.push_back(k);
  for (const char* k : {"C0", "divergent", "vacuous", "pass"}) cols.emplace_back(k);
  ReportTable t{"carleman", cols, {}};
  for (const SweepRecord& r : res.records) {
    std::vector<Cell> row{static_cast<long long>(kCsvSchemaVersion), static_cast<long long>(p.n),
                          p.kappa, p.c, p.T, r.field, r.lambda};
    for (const auto& k : kCarlemanTerms) {
      double v = std::nan("");
      for (const auto& [name, val] : r.terms) {
        if (name == k) v = val;
      }
      row.emplace_back(v);
    }
    row.emplace_back(r.C0);
    row.emplace_back(r.divergent);
    row.emplace_back(r.vacuous);
    row.emplace_back(r.pass);
    t.rows.push_back(std::move(row));
  }
  ReportTable l{"lambda0", {"schema", "n", "kappa", "field", "lambda0", "found"}, {}};
  for (const auto& [name, l0] : res.lambda0) {
    l.rows.push_back({static_cast<long long>(kCsvSchemaVersion), static_cast<long long>(p.n), p.kappa,
                      name, l0 ? *l0 : std::nan(""), l0.has_value()});
  }
  return {{t, l},
          {{"lambda0_found", res.lambda0_overall.has_value()},
           {"lambda3_exact", res.lambda3_exact},
           {"no_divergence", !res.any_divergent},
           {"non_vacuous", !res.all_vacuous}}};
}

Outcome run_solve(const RunConfig& c) {
  const Params p = params_of(c);
  const RadialGrid grid = build_radial_grid(c.n_r, c.grading, c.n);
  EquationSpec spec = equation_of(c);
  validate(spec, grid, p, 0.0, c.T);
  ReportTable tr{"traces", {"schema", "ell", "t", "neumann"}, {}};
  ReportTable en{"energies", {"schema", "ell", "t", "E1", "E2", "E_conserved", "E_kappa"}, {}};
  bool finite = true;
  for (int ell : build_mode_set(c.n, 1).ell) {
    const ModeOperator op = assemble_mode_operator(ell, spec, p, grid);
    const Vec h0 = grid.r.unaryExpr([ell](double r) {
      return std::pow(r, ell) * std::exp(-(r - 0.5) * (r - 0.5) / 0.01);
    });
    const Trajectory traj = solve_ivp(op, h0, Vec::Zero(h0.size()), 0.0, c.T);
    const TraceData td = extract_traces(traj);
    const EnergyRecord er = energies(traj);
    for (Index i = 0; i < td.t.size(); ++i) {
      tr.rows.push_back({static_cast<long long>(kCsvSchemaVersion), static_cast<long long>(ell), td.t(i),
                         td.neumann(i)});
      en.rows.push_back({static_cast<long long>(kCsvSchemaVersion), static_cast<long long>(ell), er.t(i),
                         er.E1(i), er.E2(i), er.E_conserved(i), er.E_kappa(i)});
    }
    finite = finite && td.neumann.allFinite() && er.E1.allFinite();
  }
  return {{tr, en}, {{"finite", finite}}};
}

Outcome run_obs(const RunConfig& c) {
  const Params p = params_of(c);
  std::vector<double> T_list = c.T_list;
  if (T_list.empty()) T_list = {1.2 * observability_threshold(c.n, c.kappa)};
  ObservabilityOptions o;
  o.n_r = c.n_r;
  o.grading = c.obs_grading;
  o.seeds = c.seeds;
  const auto recs = run_observability(equation_of(c), p, T_list, c.seed, o);
  ReportTable t{"observability",
                {"schema", "n", "kappa", "T", "threshold", "clears_threshold", "boundary_observation",
                 "E1_0", "ratio", "min_generalized_eig", "vacuous"},
                {}};
  bool ok = true;
  for (const auto& r : recs) {
    t.rows.push_back({static_cast<long long>(kCsvSchemaVersion), static_cast<long long>(c.n), c.kappa, r.T,
                      r.threshold, r.clears_threshold, r.boundary_observation, r.E1_0, r.ratio,
                      r.min_generalized_eig, r.vacuous});
    if (r.clears_threshold) ok = ok && !r.vacuous && r.ratio > 0.0;
  }
  return {{t}, {{"observability_positive", ok}}};
}

}  // namespace

int dispatch(const RunConfig& cfg, std::ostream& log) {
  RunManifest manifest;
  manifest.config = serialize(cfg);
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  Outcome out;
  try {
    if (cfg.command == "verify-identities") {
      out = run_identities(cfg);
    } else if (cfg.command == "verify-hardy") {
      out = run_hardy(cfg);
    } else if (cfg.command == "verify-carleman") {
      out = run_sweep(cfg, {"standard", "solver"});
    } else if (cfg.command == "sweep") {
      out = run_sweep(cfg, {cfg.corpus});
    } else if (cfg.command == "solve") {
      out = run_solve(cfg);
    } else {
      out = run_obs(cfg);
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    log << "solver failure: " << e.what() << "\n";
    manifest.failed = true;
    manifest.checks.emplace_back("solver", false);
    try {
      write_reports({}, manifest, cfg.out);
    } catch (const std::exception& io) {
      log << "error: " << io.what() << "\n";
    }
    return 2;
  }
  manifest.checks = out.checks;
  try {
    write_reports(out.tables, manifest, cfg.out);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  bool ok = true;
  for (const auto& [name, pass] : out.checks) {
    log << (pass ? "PASS " : "FAIL ") << name << "\n";
    ok = ok && pass;
  }
  return ok ? 0 : 2;
}

}  // namespace swl
