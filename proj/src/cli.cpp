#include "narrowlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "narrowlab/aplab.hpp"
#include "narrowlab/conditions.hpp"
#include "narrowlab/cutoff.hpp"
#include "narrowlab/errors.hpp"
#include "narrowlab/linforms.hpp"
#include "narrowlab/majorant.hpp"
#include "narrowlab/numtheory.hpp"
#include "narrowlab/singular.hpp"

namespace narrowlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::string fmt(double x) {
  std::ostringstream o;
  o << std::setprecision(10) << x;
  return o.str();
}

// ---- parameters ----------------------------------------------------------

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::string default_format = "table";
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;

  void add(const std::string& key, const std::string& def, const std::string& help) {
    values[key] = def;
    options[key] = app->add_option("--" + key, values[key], help)->capture_default_str();
  }
  void flag(const std::string& key, const std::string& help) {
    flags[key] = false;
    options[key] = app->add_flag("--" + key, flags[key], help);
  }
};

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("--" + key + ": expected a boolean, got '" + v + "'");
}

/// key=value lines; flags given on the command line win.
void apply_config(Command& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "config") throw UsageError(path + ":" + std::to_string(lineno) + ": config files cannot nest");
    if (auto it = cmd.values.find(key); it != cmd.values.end()) {
      if (cmd.options[key]->count() == 0) it->second = value;
    } else if (auto f = cmd.flags.find(key); f != cmd.flags.end()) {
      if (cmd.options[key]->count() == 0) f->second = parse_bool(key, value);
    } else {
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + cmd.name);
    }
  }
}

class Args {
 public:
  explicit Args(const Command& cmd) : cmd_(cmd) {}

  const std::string& str(const std::string& key) const { return cmd_.values.at(key); }
  bool flag(const std::string& key) const { return cmd_.flags.at(key); }

  /// Accepts 1000003, 1e6, 1e6+3.
  std::uint64_t u64(const std::string& key) const { return parse_u64(key, str(key)); }

  std::uint64_t u64_in(const std::string& key, std::uint64_t lo, std::uint64_t hi) const {
    const auto v = u64(key);
    if (v < lo || v > hi) {
      throw UsageError("--" + key + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    }
    return v;
  }

  double real(const std::string& key) const { return parse_real(key, str(key)); }

  std::vector<std::uint64_t> u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& tok : split(str(key), ',')) out.push_back(parse_u64(key, tok));
    if (out.empty()) throw UsageError("--" + key + ": empty list");
    return out;
  }

  std::vector<std::int64_t> i64_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& tok : split(str(key), ',')) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty()) {
        throw UsageError("--" + key + ": '" + tok + "' is not an integer");
      }
      out.push_back(v);
    }
    if (out.empty()) throw UsageError("--" + key + ": empty list");
    return out;
  }

  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split(str(key), ',')) out.push_back(parse_real(key, tok));
    if (out.empty()) throw UsageError("--" + key + ": empty list");
    return out;
  }

  std::string choice(const std::string& key, std::initializer_list<const char*> allowed) const {
    const auto& v = str(key);
    std::string names;
    for (const char* a : allowed) {
      if (v == a) return v;
      names += names.empty() ? a : std::string(", ") + a;
    }
    throw UsageError("--" + key + ": '" + v + "' is not one of " + names);
  }

 private:
  static std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t total = 0;
    const auto terms = split(text, '+');
    if (terms.empty()) throw UsageError("--" + key + ": empty value");
    for (const auto& t : terms) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
        char* end = nullptr;
        const double d = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(d) || d < 0 || d != std::floor(d) || d >= 0x1p63) {
          throw UsageError("--" + key + ": '" + text + "' is not a non-negative integer");
        }
        v = static_cast<std::uint64_t>(d);
      }
      if (total > UINT64_MAX - v) throw UsageError("--" + key + ": value overflows");
      total += v;
    }
    return total;
  }

  static double parse_real(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double d = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(d)) {
      throw UsageError("--" + key + ": '" + text + "' is not a finite number");
    }
    return d;
  }

  const Command& cmd_;
};

// ---- reports -------------------------------------------------------------

struct Report {
  ordered_json result = ordered_json::object();
  std::vector<std::string> text;  // printed above the table
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

ordered_json header(const Command& cmd, double seconds, bool timing) {
  ordered_json h;
  h["tool"] = "narrowlab";
  h["version"] = kVersion;
  h["command"] = cmd.name;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : cmd.values) {
    if (k != "config" && k != "out" && k != "format") config[k] = v;
  }
  for (const auto& [k, v] : cmd.flags) {
    if (k != "timing") config[k] = v;
  }
  h["config"] = config;
  h["seed"] = cmd.values.at("seed");
  h["workers"] = cmd.values.at("workers");
  if (timing) h["wall_seconds"] = seconds;
  return h;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void print_table(std::ostream& out, const Report& r) {
  for (const auto& line : r.text) out << line << '\n';
  if (r.columns.empty()) return;
  std::vector<std::size_t> width(r.columns.size());
  for (std::size_t i = 0; i < r.columns.size(); ++i) width[i] = r.columns[i].size();
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << cells[i];
    }
    out << '\n';
  };
  line(r.columns);
  for (const auto& row : r.rows) line(row);
}

void write_out(const fs::path& path, const ordered_json& head, const Report& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (path.extension() == ".json") {
    ordered_json doc;
    doc["header"] = head;
    doc["result"] = r.result;
    out << doc.dump(2) << '\n';
  } else {
    out << "# " << head["tool"].get<std::string>() << ' ' << head["version"].get<std::string>() << '\n';
    out << "# command: " << head["command"].get<std::string>() << '\n';
    for (const auto& [k, v] : head["config"].items()) {
      out << "# " << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    if (head.contains("wall_seconds")) out << "# wall_seconds=" << head["wall_seconds"].get<double>() << '\n';
    for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << csv_field(r.columns[i]);
    out << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

// ---- shared pieces -------------------------------------------------------

std::optional<fs::path> cache_dir() {
  const char* env = std::getenv("NARROWLAB_CACHE_DIR");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

unsigned workers_of(const Args& a) { return static_cast<unsigned>(a.u64_in("workers", 1, 256)); }

void add_family_options(Command& c) {
  c.add("family", "first", "first, second, third or file");
  c.add("k", "3", "progression length");
  c.add("j", "1", "third family index (1 <= j <= k)");
  c.add("forms", "", "form file for --family file");
}

LinearSystem system_from(const Args& a) {
  const auto family = a.choice("family", {"first", "second", "third", "file"});
  if (family == "file") {
    const auto& path = a.str("forms");
    if (path.empty()) throw UsageError("--forms: required with --family file");
    std::ifstream in(path);
    if (!in) throw UsageError("--forms: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      return LinearSystem::from_text(buf.str());
    } catch (const DomainError& e) {
      throw UsageError("--forms: " + std::string(e.what()));
    }
  }
  const int k = static_cast<int>(a.u64_in("k", 2, family == "second" ? 12 : 6));
  if (family == "first") return first_family(k);
  if (family == "second") return second_family(k);
  const int j = static_cast<int>(a.u64_in("j", 1, static_cast<std::uint64_t>(k)));
  return third_family(k, j);
}

std::string rational_text(const Rational& q) { return q.get_num().get_str() + "/" + q.get_den().get_str(); }

void add_majorant_options(Command& c) {
  c.add("N", "1e6+3", "prime modulus N'");
  c.add("w", "3", "W-trick bound, W = product of primes <= w");
  c.add("b", "1", "residue class b mod W");
  c.add("r-exp", "0.5", "R = (W N' + b)^r-exp, in (0, 1/2]");
  c.add("kind", "cosine", "cutoff kind: cosine or bump");
  c.flag("no-cache", "ignore NARROWLAB_CACHE_DIR");
}

struct MajorantParams {
  WTrickContext ctx;
  double r_exp = 0.5;
  CutoffKind kind = CutoffKind::cosine;
  bool use_cache = true;
};

MajorantParams majorant_params(const Args& a) {
  MajorantParams p;
  const auto N = a.u64_in("N", 3, std::uint64_t{1} << 32);
  const auto w = a.u64_in("w", 1, 23);
  const auto b = a.u64("b");
  try {
    p.ctx = primorial_context(w, static_cast<std::int64_t>(b), N);
  } catch (const DomainError& e) {
    throw UsageError("--N/--w/--b: " + std::string(e.what()));
  }
  p.r_exp = a.real("r-exp");
  if (!(p.r_exp > 0 && p.r_exp <= 0.5)) throw UsageError("--r-exp: must lie in (0, 0.5]");
  p.kind = parse_cutoff_kind(a.choice("kind", {"cosine", "bump"}));
  p.use_cache = !a.flag("no-cache");
  return p;
}

MajorantTable obtain_majorant(const MajorantParams& p, unsigned workers, std::string& source) {
  const double R = majorant_R(p.ctx, p.r_exp);
  std::optional<fs::path> path;
  if (p.use_cache) {
    if (auto dir = cache_dir()) {
      std::ostringstream name;
      name << "majorant_N" << p.ctx.modulus << "_W" << p.ctx.W << "_b" << p.ctx.b << '_' << to_string(p.kind) << "_r"
           << std::setprecision(6) << p.r_exp << ".napmv";
      path = *dir / name.str();
      if (fs::exists(*path)) {
        auto table = load_majorant(*path);
        source = "cache " + path->string();
        return table;
      }
    }
  }
  const FactorSieve sieve(static_cast<std::uint64_t>(std::floor(R)) + 1);
  auto table = build_majorant(p.ctx, R, make_cutoff(p.kind), sieve, {workers});
  source = "built";
  if (path) {
    fs::create_directories(path->parent_path());
    save_majorant(*path, table);
    source = "built, saved to " + path->string();
  }
  return table;
}

// ---- subcommands ---------------------------------------------------------

void run_sieve_build(const Args& a, Report& r) {
  const auto limit = a.u64_in("limit", 2, (std::uint64_t{1} << 32) - 2);
  fs::path path = a.str("path");
  if (path.empty()) {
    auto dir = cache_dir();
    if (!dir) throw UsageError("--path: required when NARROWLAB_CACHE_DIR is unset");
    path = *dir / ("sieve_" + std::to_string(limit) + ".napsv");
  }
  const bool verify = a.flag("verify");
  SieveOptions opt;
  opt.workers = workers_of(a);

  const FactorSieve sieve(limit, opt);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_sieve(path, sieve);
  std::uint64_t primes = 0;
  for (std::uint64_t n = 2; n <= limit; ++n) primes += sieve.spf(n) == n;
  bool verified = false;
  if (verify) {
    const auto back = load_sieve(path);
    const auto x = sieve.table(), y = back.table();
    verified = std::equal(x.begin(), x.end(), y.begin(), y.end());
    if (!verified) throw FormatError("reloaded sieve differs from the built one");
  }
  r.result = {{"limit", limit}, {"primes", primes}, {"path", path.string()}, {"bytes", fs::file_size(path)}};
  if (verify) r.result["verified"] = verified;
  r.columns = {"limit", "primes", "bytes", "path"};
  r.rows.push_back({std::to_string(limit), std::to_string(primes), std::to_string(fs::file_size(path)), path.string()});
  if (verify) r.text.push_back("reload verified");
}

void run_lindex(const Args& a, Report& r) {
  const auto sys = system_from(a);
  const bool brute = a.flag("brute");
  LIndexOptions opt;
  opt.max_subspaces = a.u64_in("max-subspaces", 1, std::uint64_t{1} << 40);
  if (brute && sys.size() > 8) throw UsageError("--brute: needs at most 8 forms, system has " + std::to_string(sys.size()));

  const auto res = brute ? lindex_bruteforce(sys) : lindex(sys, opt);
  ordered_json atoms = ordered_json::array();
  if (res.witness) {
    for (const auto& atom : res.witness->atoms) atoms.push_back(atom);
  }
  r.result["L"] = rational_text(res.value);
  r.result["witness_atoms"] = atoms;
  r.result["codim"] = res.witness_codim;
  r.result["merges"] = res.witness_merges;
  r.result["subspaces_explored"] = res.subspaces_explored;
  r.result["forms"] = sys.size();
  if (res.witness_flat) r.result["flat"] = res.witness_flat->describe(sys.variable_names());
  r.text.push_back("L = " + res.value.get_str());
  r.columns = {"forms", "codim", "merges", "subspaces", "flat"};
  r.rows.push_back({std::to_string(sys.size()), std::to_string(res.witness_codim), std::to_string(res.witness_merges),
                    std::to_string(res.subspaces_explored),
                    res.witness_flat ? res.witness_flat->describe(sys.variable_names()) : ""});
}

void run_forms_dump(const Args& a, Report& r) {
  const auto sys = system_from(a);
  r.result["dim"] = sys.dim();
  r.result["variables"] = sys.variable_names();
  ordered_json forms = ordered_json::array();
  r.columns = {"index", "form"};
  for (std::size_t i = 0; i < sys.size(); ++i) {
    forms.push_back(sys.describe(i));
    r.rows.push_back({std::to_string(i), sys.describe(i)});
  }
  r.result["forms"] = forms;
  r.result["text"] = sys.to_text();
}

void run_singular(const Args& a, Report& r) {
  const ShiftVector h(a.i64_list("h"));
  const auto pmax = a.u64_in("pmax", 3, 2'000'000'000);
  const auto w = a.u64_in("w", 1, 23);
  const auto W = primorial(w);
  const auto v = SingularSeriesEvaluator(pmax)(h, W);
  r.result = {{"value", v.value}, {"pmax", v.pmax}, {"tail_bound", v.tail_bound}, {"zero", v.zero}};
  r.columns = {"h", "W", "value", "pmax", "tail_bound", "zero"};
  std::string hs;
  for (auto x : h.entries()) hs += (hs.empty() ? "" : " ") + std::to_string(x);
  r.rows.push_back({hs, std::to_string(W), fmt(v.value), std::to_string(v.pmax), fmt(v.tail_bound), v.zero ? "yes" : "no"});
}

void run_gallagher(const Args& a, Report& r) {
  const auto weight = a.choice("weight", {"gw", "e"}) == "gw" ? GallagherWeight::GW : GallagherWeight::E;
  const auto t = a.u64_in("t", 1, 8);
  const auto H = a.u64_in("H", 1, 1'000'000);
  const auto ws = a.u64_list("w");
  for (auto w : ws) {
    if (w > 23) throw UsageError("--w: " + std::to_string(w) + " is above 23");
  }
  const auto pmax = a.u64_in("pmax", 3, 100'000'000);
  const double C = a.real("C");
  GallagherOptions opt;
  opt.samples = a.u64("samples");
  opt.allow_sampling = opt.samples > 0;
  opt.seed = a.u64("seed");
  opt.workers = workers_of(a);

  std::vector<std::pair<std::int64_t, std::int64_t>> box(t, {1, static_cast<std::int64_t>(H)});
  r.columns = {"w", "W", "mean", "abs_deviation", "std_error", "points", "sampled"};
  r.result["rows"] = ordered_json::array();
  for (auto w : ws) {
    const auto W = primorial(w);
    const auto g = gallagher_average(weight, box, W, pmax, C, opt);
    r.result["rows"].push_back({{"w", w}, {"W", W}, {"mean", g.mean}, {"abs_deviation", g.abs_deviation},
                                {"std_error", g.std_error}, {"points", g.points}, {"sampled", g.sampled}});
    r.rows.push_back({std::to_string(w), std::to_string(W), fmt(g.mean), fmt(g.abs_deviation), fmt(g.std_error),
                      std::to_string(g.points), g.sampled ? "yes" : "no"});
  }
}

void run_cutoff_check(const Args& a, Report& r) {
  const auto kinds = a.choice("kind", {"cosine", "bump", "all"});
  const auto norm = parse_normalization(a.choice("norm", {"half-line", "full-line"}));
  const auto ms = a.u64_list("m");
  for (auto m : ms) {
    if (m < 1 || m > 3) throw UsageError("--m: " + std::to_string(m) + " outside 1..3");
  }
  std::vector<CutoffKind> list;
  if (kinds != "bump") list.push_back(CutoffKind::cosine);
  if (kinds != "cosine") list.push_back(CutoffKind::bump);

  r.columns = {"kind", "norm", "m", "c_chi_m", "tail_estimate", "imag_residual", "half_line_energy", "full_line_residual"};
  r.result["rows"] = ordered_json::array();
  for (auto kind : list) {
    const auto spec = make_cutoff(kind, norm);
    const double energy = dirichlet_energy(spec, 0.0, 1.0);
    const double resid = full_line_residual(spec);
    for (auto m : ms) {
      const auto sf = sieve_factor(spec, static_cast<int>(m));
      r.result["rows"].push_back({{"kind", to_string(kind)}, {"norm", to_string(norm)}, {"m", m}, {"value", sf.value},
                                  {"tail_estimate", sf.tail_estimate}, {"imag_residual", sf.imag_residual},
                                  {"half_line_energy", energy}, {"full_line_residual", resid}});
      r.rows.push_back({std::string(to_string(kind)), std::string(to_string(norm)), std::to_string(m), fmt(sf.value),
                        fmt(sf.tail_estimate), fmt(sf.imag_residual), fmt(energy), fmt(resid)});
    }
  }
}

void run_majorant(const Args& a, Report& r) {
  const auto p = majorant_params(a);
  const bool check = a.flag("check-floor");
  const unsigned workers = workers_of(a);

  std::string source;
  const auto table = obtain_majorant(p, workers, source);
  const auto m = majorant_mean(table);
  r.result = {{"N", p.ctx.modulus}, {"W", p.ctx.W}, {"b", p.ctx.b}, {"R", table.R}, {"mean", m.mean},
              {"std_error", m.std_error}, {"floor", table.floor()}};
  r.text.push_back("table: " + source);
  r.columns = {"N", "W", "b", "R", "mean", "std_error", "floor"};
  r.rows.push_back({std::to_string(p.ctx.modulus), std::to_string(p.ctx.W), std::to_string(p.ctx.b), fmt(table.R),
                    fmt(m.mean), fmt(m.std_error), fmt(table.floor())});
  if (check) {
    const PrimeTable primes(p.ctx.W * (p.ctx.modulus - 1) + p.ctx.b);
    const auto mr = check_minorization(table, primes);
    r.result["violations"] = mr.violations;
    r.result["primes_checked"] = mr.primes_checked;
    r.result["min_ratio"] = mr.min_ratio;
    r.columns.insert(r.columns.end(), {"violations", "primes_checked", "min_ratio"});
    r.rows.back().insert(r.rows.back().end(),
                         {std::to_string(mr.violations), std::to_string(mr.primes_checked), fmt(mr.min_ratio)});
  }
}

void run_correlate(const Args& a, Report& r) {
  const auto p = majorant_params(a);
  const auto hs = a.i64_list("h");
  const auto pmax = a.u64_in("pmax", 3, 100'000'000);
  for (auto h : hs) {
    if (h % static_cast<std::int64_t>(p.ctx.modulus) == 0) throw UsageError("--h: shifts must be nonzero mod N'");
  }
  std::string source;
  const auto table = obtain_majorant(p, workers_of(a), source);
  r.text.push_back("table: " + source);
  r.columns = {"h", "empirical", "predicted", "ratio"};
  r.result["rows"] = ordered_json::array();
  for (auto h : hs) {
    const auto c = majorant_pair_correlation(table, h, pmax);
    r.result["rows"].push_back({{"h", h}, {"empirical", c.empirical}, {"predicted", c.predicted}, {"ratio", c.ratio}});
    r.rows.push_back({std::to_string(h), fmt(c.empirical), fmt(c.predicted), fmt(c.ratio)});
  }
}

void run_lfc(const Args& a, Report& r) {
  const auto sys = system_from(a);
  const auto model_name = a.choice("model", {"random", "constant", "majorant"});
  const double alpha = a.real("alpha");
  if (model_name == "random" && !(alpha > 0 && alpha < 1)) throw UsageError("--alpha: must lie in (0, 1)");
  const auto S = static_cast<std::int64_t>(a.u64_in("S", 1, 1'000'000'000));
  const auto samples = a.u64("samples");
  const bool exact = a.flag("exact");
  const auto seed = a.u64("seed");
  const unsigned workers = workers_of(a);
  if (!exact && samples == 0) throw UsageError("--samples: must be positive unless --exact");
  ExponentPattern e;
  if (!a.str("exponents").empty()) {
    for (auto x : a.u64_list("exponents")) {
      if (x > 1) throw UsageError("--exponents: entries must be 0 or 1");
      e.push_back(static_cast<std::uint8_t>(x));
    }
    if (e.size() != sys.size()) throw UsageError("--exponents: need one entry per form");
  }
  const auto mp = majorant_params(a);

  std::optional<MajorantTable> table;
  std::string source = model_name;
  WeightModel model = WeightModel::constant(mp.ctx.modulus);
  if (model_name == "majorant") {
    table = obtain_majorant(mp, workers, source);
    model = WeightModel::from_table(*table);
  } else if (model_name == "random") {
    model = WeightModel::random(alpha, seed, mp.ctx.modulus);
  }
  const auto box = BoxRegion::centered(sys.dim(), S);
  r.result["model"] = model_name;
  r.result["forms"] = sys.size();
  r.result["S"] = S;
  r.columns = {"model", "forms", "S", "estimate", "std_error", "samples"};
  if (exact) {
    const double v = lfc_average_exact(model, sys.forms(), e, box);
    r.result["estimate"] = v;
    r.result["exact"] = true;
    r.rows.push_back({model_name, std::to_string(sys.size()), std::to_string(S), fmt(v), "0", "exact"});
  } else {
    const auto est = lfc_average_mc(model, sys.forms(), e, box, samples, seed, workers);
    r.result["estimate"] = est.estimate;
    r.result["std_error"] = est.std_error;
    r.result["samples"] = est.samples;
    r.rows.push_back({model_name, std::to_string(sys.size()), std::to_string(S), fmt(est.estimate), fmt(est.std_error),
                      std::to_string(est.samples)});
  }
  if (table) r.text.push_back("table: " + source);
}

void run_threshold(const Args& a, Report& r) {
  const auto sys = system_from(a);
  const auto alphas = a.real_list("alphas");
  if (alphas.size() < 3) throw UsageError("--alphas: need at least three values");
  for (double x : alphas) {
    if (!(x > 0 && x < 1)) throw UsageError("--alphas: values must lie in (0, 1)");
  }
  DeviationOptions opt;
  opt.max_subspaces = a.u64_in("max-subspaces", 1, std::uint64_t{1} << 32);
  opt.workers = workers_of(a);

  const auto fit = width_threshold_fit(sys, alphas, opt);
  r.result["slope"] = fit.slope;
  r.result["intercept"] = fit.intercept;
  r.result["points"] = ordered_json::array();
  r.columns = {"alpha", "S_star", "dominant_codim", "dominant_ratio", "deviation", "approximate"};
  for (const auto& pt : fit.points) {
    r.result["points"].push_back({{"alpha", pt.alpha}, {"S_star", pt.S_star}, {"dominant_codim", pt.dominant_codim},
                                  {"dominant_ratio", rational_text(pt.dominant_ratio)}, {"deviation", pt.deviation},
                                  {"approximate", pt.approximate}});
    r.rows.push_back({fmt(pt.alpha), fmt(pt.S_star), std::to_string(pt.dominant_codim), pt.dominant_ratio.get_str(),
                      fmt(pt.deviation), pt.approximate ? "yes" : "no"});
  }
  r.text.push_back("slope of log S* against log(1/alpha): " + fmt(fit.slope));
}

void run_lambda_d(const Args& a, Report& r) {
  const auto N = a.u64_in("N", 5, 100'000'000);
  const auto k = a.u64_in("k", 1, 8);
  auto D = a.u64("D");
  const double logN = std::log(static_cast<double>(N));
  if (D == 0) D = static_cast<std::uint64_t>(std::ceil(std::pow(logN, 4)));
  if (D >= N) throw UsageError("--D: " + std::to_string(D) + " must be below N' = " + std::to_string(N));

  // f = log N' on primes in [sqrt N', N'), 0 elsewhere
  const PrimeTable primes(N);
  std::vector<double> f(N, 0.0);
  std::uint64_t support = 0;
  const auto lo = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(N))));
  for (std::uint64_t n = lo; n < N; ++n) {
    if (primes.is_prime(n)) {
      f[n] = logN;
      ++support;
    }
  }
  const std::vector<std::span<const double>> fs(k, std::span<const double>(f));
  const double v = lambda_D(fs, D);
  r.result = {{"N", N}, {"k", k}, {"D", D}, {"support", support}, {"lambda", v}};
  r.columns = {"N", "k", "D", "support", "lambda"};
  r.rows.push_back({std::to_string(N), std::to_string(k), std::to_string(D), std::to_string(support), fmt(v)});
}

void run_apsearch(const Args& a, Report& r) {
  const auto mode = a.choice("mode", {"count", "narrowness"});
  const auto k = a.u64_in("k", mode == "count" ? 1 : 2, 12);
  if (mode == "count") {
    const auto N = a.u64_in("N", 2, std::uint64_t{1} << 36);
    const auto d = a.u64_in("d", 1, std::uint64_t{1} << 32);
    const auto pmax = a.u64_in("pmax", 3, 100'000'000);
    const PrimeTable primes(N + (k - 1) * d);
    const auto rep = ap_count_report(N, static_cast<unsigned>(k), d, primes, pmax);
    r.result = {{"N", N},
                {"k", k},
                {"d", d},
                {"count", rep.count},
                {"singular", rep.prediction.singular},
                {"prediction", rep.prediction.integral},
                {"prediction_simple", rep.prediction.simple},
                {"ratio", rep.ratio}};
    r.columns = {"N", "k", "d", "count", "G", "prediction", "N/log^k N form", "ratio"};
    r.rows.push_back({std::to_string(N), std::to_string(k), std::to_string(d), std::to_string(rep.count),
                      fmt(rep.prediction.singular), fmt(rep.prediction.integral), fmt(rep.prediction.simple), fmt(rep.ratio)});
    return;
  }
  std::vector<std::uint64_t> ladder = a.str("ladder").empty() ? std::vector<std::uint64_t>{a.u64("N")} : a.u64_list("ladder");
  for (auto N : ladder) {
    if (N < 3 || N > (std::uint64_t{1} << 36)) throw UsageError("--ladder: " + std::to_string(N) + " out of range");
  }
  SubsetRule rule;
  rule.modulus = a.u64_in("subset-mod", 1, 1'000'000);
  rule.residues = a.u64_list("subset-res");
  for (auto x : rule.residues) {
    if (x >= rule.modulus) throw UsageError("--subset-res: residue " + std::to_string(x) + " not below the modulus");
  }
  const double delta = a.real("delta");
  if (!(delta >= 0 && delta <= 1)) throw UsageError("--delta: must lie in [0, 1]");

  const PrimeTable primes(*std::max_element(ladder.begin(), ladder.end()));
  const auto rows = narrowness_report(ladder, static_cast<unsigned>(k), delta, rule, primes);
  r.columns = {"N", "min_d", "median_d", "log_k1", "log_Lk", "ratio_k1", "ratio_Lk", "density", "starts"};
  r.result["rows"] = ordered_json::array();
  for (const auto& w : rows) {
    r.result["rows"].push_back({{"N", w.N}, {"min_d", w.min_d}, {"median_d", w.median_d}, {"log_k1", w.log_k1},
                                {"log_Lk", w.log_Lk}, {"ratio_k1", w.ratio_k1}, {"ratio_Lk", w.ratio_Lk},
                                {"density", w.density}, {"meets_delta", w.meets_delta}, {"starts", w.starts}});
    r.rows.push_back({std::to_string(w.N), std::to_string(w.min_d), fmt(w.median_d), fmt(w.log_k1), fmt(w.log_Lk),
                      fmt(w.ratio_k1), fmt(w.ratio_Lk), fmt(w.density), std::to_string(w.starts)});
    if (!w.meets_delta) {
      r.text.push_back("warning: density " + fmt(w.density) + " at N = " + std::to_string(w.N) + " is below delta");
    }
  }
}

using Runner = std::function<void(const Args&, Report&)>;

struct Spec {
  const char* name;
  const char* help;
  Runner run;
  std::function<void(Command&)> options;
  const char* default_format = "table";
};

std::vector<Spec> specs() {
  return {
      {"sieve-build", "build and cache a smallest-prime-factor table", run_sieve_build,
       [](Command& c) {
         c.add("limit", "1e6", "table covers [0, limit]");
         c.add("path", "", "cache file (default: $NARROWLAB_CACHE_DIR/sieve_<limit>.napsv)");
         c.flag("verify", "reload and compare");
       }},
      {"lindex", "collision index L of a form family", run_lindex,
       [](Command& c) {
         add_family_options(c);
         c.add("max-subspaces", "5000000", "closure lattice cap");
         c.flag("brute", "enumerate set partitions instead (t <= 8)");
       }},
      {"forms-dump", "list the forms of a family", run_forms_dump, [](Command& c) { add_family_options(c); }},
      {"singular", "singular series G_W(h)", run_singular,
       [](Command& c) {
         c.add("h", "0,2", "comma-separated shifts");
         c.add("pmax", "100000", "Euler product truncation");
         c.add("w", "1", "remove primes <= w");
       },
       "json"},
      {"gallagher", "average of the singular series over a box", run_gallagher,
       [](Command& c) {
         c.add("weight", "gw", "gw or e");
         c.add("t", "2", "box dimension");
         c.add("H", "500", "box [1, H]^t");
         c.add("w", "2,3,5,7", "W-trick bounds");
         c.add("pmax", "100000", "Euler product truncation");
         c.add("C", "1", "constant in the weight e");
         c.add("samples", "0", "Monte Carlo samples when the box is too large (0: exact only)");
       }},
      {"cutoff-check", "sieve factors and normalization of the cutoffs", run_cutoff_check,
       [](Command& c) {
         c.add("kind", "all", "cosine, bump or all");
         c.add("norm", "half-line", "half-line or full-line");
         c.add("m", "2", "comma-separated m in 1..3");
       }},
      {"majorant", "build the sieve majorant and report its mean", run_majorant,
       [](Command& c) {
         add_majorant_options(c);
         c.flag("check-floor", "scan every prime Wn + b > R for the lower bound");
       }},
      {"correlate", "pair correlations of the majorant", run_correlate,
       [](Command& c) {
         add_majorant_options(c);
         c.add("h", "2,4,6", "comma-separated shifts");
         c.add("pmax", "100000", "Euler product truncation for the prediction");
       }},
      {"lfc", "linear forms average of a weight model", run_lfc,
       [](Command& c) {
         add_family_options(c);
         add_majorant_options(c);
         c.add("model", "random", "random, constant or majorant");
         c.add("alpha", "0.1", "density of the random model");
         c.add("S", "8", "box [-S, S]^d");
         c.add("samples", "100000", "Monte Carlo samples");
         c.add("exponents", "", "0/1 per form (default all 1)");
         c.flag("exact", "exact average instead of sampling");
       }},
      {"threshold", "width threshold S*(alpha) and its exponent", run_threshold,
       [](Command& c) {
         add_family_options(c);
         c.add("alphas", "0.2,0.1,0.05", "densities");
         c.add("max-subspaces", "200000", "closure lattice cap");
       }},
      {"lambda-d", "narrow progression average on the primes", run_lambda_d,
       [](Command& c) {
         c.add("N", "1e5+3", "modulus N'");
         c.add("k", "3", "number of functions");
         c.add("D", "0", "difference range (0: ceil((log N')^4))");
       }},
      {"apsearch", "prime progressions: counts and narrowness", run_apsearch,
       [](Command& c) {
         c.add("mode", "count", "count or narrowness");
         c.add("N", "1e7", "upper bound");
         c.add("k", "3", "progression length");
         c.add("d", "6", "common difference (count mode)");
         c.add("pmax", "100000", "Euler product truncation");
         c.add("ladder", "", "comma-separated N values (narrowness mode)");
         c.add("subset-mod", "1", "keep primes p with p mod m in --subset-res");
         c.add("subset-res", "0", "comma-separated residues");
         c.add("delta", "0", "required density of the subset among primes");
       }},
  };
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"narrowlab: experiments on narrow progressions in the primes", "narrowlab"};
  app.set_help_flag("--help", "print help");
  app.set_version_flag("--version", std::string("narrowlab ") + kVersion);
  app.require_subcommand(1);

  auto all = specs();
  std::vector<Command> commands(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& c = commands[i];
    c.name = all[i].name;
    c.default_format = all[i].default_format;
    c.app = app.add_subcommand(all[i].name, all[i].help);
    all[i].options(c);
    c.add("seed", "1", "random seed");
    c.add("workers", "1", "worker threads");
    c.add("out", "", "report file (.json or CSV)");
    c.add("format", "", "stdout format: table or json");
    c.add("config", "", "key=value file; flags override it");
    c.flag("timing", "record wall time in reports");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  Command* cmd = nullptr;
  for (auto& c : commands) {
    if (c.app->parsed()) cmd = &c;
  }
  if (!cmd) {
    err << "usage error: no subcommand\n";
    return 2;
  }
  const auto runner = std::find_if(all.begin(), all.end(), [&](const Spec& s) { return cmd->name == s.name; })->run;

  Report report;
  const auto t0 = std::chrono::steady_clock::now();
  std::string format;
  try {
    if (!cmd->values["config"].empty()) apply_config(*cmd, cmd->values["config"]);
    const Args args(*cmd);
    format = args.str("format").empty() ? cmd->default_format : args.choice("format", {"table", "json"});
    args.u64("seed");
    workers_of(args);
    runner(args, report);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto head = header(*cmd, seconds, cmd->flags["timing"]);
  if (format == "json") {
    out << report.result.dump(2) << '\n';
  } else {
    print_table(out, report);
    if (cmd->flags["timing"]) out << "wall time " << fmt(seconds) << " s\n";
  }
  if (const auto& path = cmd->values["out"]; !path.empty()) {
    try {
      write_out(path, head, report);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}

int parse_and_dispatch(int argc, const char* const* argv) { return parse_and_dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace narrowlab
