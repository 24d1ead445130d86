#include "decaylab/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "decaylab/errors.hpp"

namespace decaylab {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

/// "section.key" -> line number, for diagnostics.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      out[section] = n;
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos) out[section + "." + trim(t.substr(0, eq))] = n;
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string origin, std::map<std::string, int> lines)
      : tree_(tree), origin_(std::move(origin)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << origin_;
    auto it = lines_.find(key.empty() ? section : section + "." + key);
    if (it == lines_.end()) it = lines_.find(section);
    if (it != lines_.end()) os << ":" << it->second;
    os << ": [" << section << "]";
    if (!key.empty()) os << " " << key;
    os << ": " << msg;
    throw SpecError(os.str());
  }

  bool has_section(const std::string& s) const { return tree_.find(s) != tree_.not_found(); }

  const pt::ptree& section(const std::string& s) const { return tree_.get_child(s); }

  std::optional<std::string> raw(const std::string& s, const std::string& key) const {
    if (!has_section(s)) return std::nullopt;
    const auto v = section(s).get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return unquote(*v);
  }

  std::string text(const std::string& s, const std::string& key, const std::string& fallback) const {
    return raw(s, key).value_or(fallback);
  }

  std::string required_text(const std::string& s, const std::string& key) const {
    const auto v = raw(s, key);
    if (!v || v->empty()) fail(s, key, "required field is missing");
    return *v;
  }

  double number(const std::string& s, const std::string& key, double fallback, bool required = false) const {
    const auto v = raw(s, key);
    if (!v) {
      if (required) fail(s, key, "required field is missing");
      return fallback;
    }
    double out = 0.0;
    const char* b = v->data();
    const char* e = b + v->size();
    const auto r = std::from_chars(b, e, out);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(out)) fail(s, key, "expected a number, got '" + *v + "'");
    return out;
  }

  std::uint64_t integer(const std::string& s, const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(s, key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const char* b = v->data();
    const char* e = b + v->size();
    const auto r = std::from_chars(b, e, out);
    if (r.ec != std::errc() || r.ptr != e) fail(s, key, "expected a non-negative integer, got '" + *v + "'");
    return out;
  }

  void only_keys(const std::string& s, const std::set<std::string>& allowed) const {
    if (!has_section(s)) return;
    for (const auto& [k, _] : section(s)) {
      if (!allowed.count(k)) fail(s, k, "unknown field");
    }
  }

 private:
  const pt::ptree& tree_;
  std::string origin_;
  std::map<std::string, int> lines_;
};

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SpecError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const Reader r(tree, origin, key_lines(text));

  const std::set<std::string> sections{"scenario", "nonlinearity", "perturbation", "noise", "run", "output"};
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) r.fail(name, "", "unknown section");
    if (child.empty() && !child.data().empty()) r.fail(name, "", "key outside of any section");
  }

  Scenario s;
  s.name = r.text("scenario", "name", s.name);
  r.only_keys("scenario", {"name"});

  if (!r.has_section("nonlinearity")) throw SpecError(origin + ": missing [nonlinearity] section");
  r.only_keys("nonlinearity", {"kind", "beta", "table"});
  auto& nl = s.nonlinearity;
  nl.kind = r.required_text("nonlinearity", "kind");
  if (nl.kind == "power") {
    nl.beta = r.number("nonlinearity", "beta", 0.0, true);
    if (!(nl.beta > 1.0)) r.fail("nonlinearity", "beta", "must be > 1");
  } else if (nl.kind == "custom") {
    nl.table = r.required_text("nonlinearity", "table");
  } else if (nl.kind != "linear" && nl.kind != "flat_exponential") {
    r.fail("nonlinearity", "kind", "expected power, linear, flat_exponential or custom, got '" + nl.kind + "'");
  }

  if (r.has_section("perturbation") && r.has_section("noise")) {
    throw SpecError(origin + ": [perturbation] and [noise] are mutually exclusive");
  }
  if (r.has_section("perturbation")) {
    r.only_keys("perturbation", {"form", "c", "q", "omega"});
    PerturbationSection p;
    p.form = r.required_text("perturbation", "form");
    if (p.form == "power_tail" || p.form == "oscillatory") {
      p.c = r.number("perturbation", "c", p.c);
      p.q = r.number("perturbation", "q", 0.0, true);
      if (p.form == "oscillatory") p.omega = r.number("perturbation", "omega", p.omega);
      if (p.q < 0.0) r.fail("perturbation", "q", "must be >= 0");
    } else if (p.form != "zero") {
      r.fail("perturbation", "form", "expected zero, power_tail or oscillatory, got '" + p.form + "'");
    }
    s.perturbation = p;
  }
  if (r.has_section("noise")) {
    r.only_keys("noise", {"form", "c", "p"});
    NoiseSection n;
    n.form = r.required_text("noise", "form");
    if (n.form == "power_tail") {
      n.c = r.number("noise", "c", n.c);
      n.p = r.number("noise", "p", 0.0, true);
      if (n.p < 0.0) r.fail("noise", "p", "must be >= 0");
    } else if (n.form == "constant") {
      n.c = r.number("noise", "c", 0.0, true);
    } else if (n.form != "zero") {
      r.fail("noise", "form", "expected zero, power_tail or constant, got '" + n.form + "'");
    }
    s.noise = n;
  }

  r.only_keys("run", {"xi", "x0", "horizon", "rtol", "atol", "tol_lambda", "drift_tol", "c_bound", "paths", "seed",
                      "n_seg", "dt_max", "threads"});
  auto& run = s.run;
  if (s.stochastic()) run.horizon = 1e4;
  if (r.raw("run", "xi") && r.raw("run", "x0")) r.fail("run", "x0", "give either xi or x0, not both");
  run.xi = r.raw("run", "x0") ? r.number("run", "x0", run.xi) : r.number("run", "xi", run.xi);
  run.horizon = r.number("run", "horizon", run.horizon);
  run.rtol = r.number("run", "rtol", run.rtol);
  run.atol = r.number("run", "atol", run.atol);
  run.tol_lambda = r.number("run", "tol_lambda", run.tol_lambda);
  run.drift_tol = r.number("run", "drift_tol", run.drift_tol);
  run.c_bound = r.number("run", "c_bound", run.c_bound);
  run.paths = r.integer("run", "paths", run.paths);
  if (r.raw("run", "seed")) run.seed = r.integer("run", "seed", 0);
  run.n_seg = static_cast<int>(r.integer("run", "n_seg", static_cast<std::uint64_t>(run.n_seg)));
  run.dt_max = r.number("run", "dt_max", run.dt_max);
  run.threads = static_cast<unsigned>(r.integer("run", "threads", run.threads));

  if (!(run.horizon >= 1.0)) r.fail("run", "horizon", "must be >= 1");
  for (const auto& [key, v] : {std::pair<const char*, double>{"rtol", run.rtol},
                               {"atol", run.atol},
                               {"tol_lambda", run.tol_lambda},
                               {"drift_tol", run.drift_tol},
                               {"c_bound", run.c_bound},
                               {"dt_max", run.dt_max}}) {
    if (!(v > 0.0)) r.fail("run", key, "must be strictly positive");
  }
  if (run.n_seg < 1) r.fail("run", "n_seg", "must be >= 1");
  if (s.stochastic()) {
    if (!run.seed) r.fail("run", "seed", "required when [noise] is present");
    if (run.paths < 1) r.fail("run", "paths", "must be >= 1");
    if (!(run.horizon >= 10.0)) r.fail("run", "horizon", "must be >= 10 for ensembles");
  }

  r.only_keys("output", {"dir", "formats"});
  s.output.dir = r.text("output", "dir", "");
  if (const auto formats = r.raw("output", "formats")) {
    s.output.csv = formats->find("csv") != std::string::npos;
    s.output.json = formats->find("json") != std::string::npos;
    if (!s.output.csv && !s.output.json) r.fail("output", "formats", "expected csv and/or json");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario_text(buf.str(), path.string());
  s.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (s.name == "scenario") s.name = path.stem().string();
  return s;
}

std::string to_ini(const Scenario& s) {
  std::ostringstream os;
  os << "[scenario]\nname = " << s.name << "\n\n";
  os << "[nonlinearity]\nkind = " << s.nonlinearity.kind << "\n";
  if (s.nonlinearity.kind == "power") os << "beta = " << format_double(s.nonlinearity.beta) << "\n";
  if (s.nonlinearity.kind == "custom") {
    os << "table = " << std::filesystem::absolute(s.base_dir / s.nonlinearity.table).lexically_normal().string()
       << "\n";
  }
  if (s.perturbation) {
    const auto& p = *s.perturbation;
    os << "\n[perturbation]\nform = " << p.form << "\n";
    if (p.form != "zero") os << "c = " << format_double(p.c) << "\nq = " << format_double(p.q) << "\n";
    if (p.form == "oscillatory") os << "omega = " << format_double(p.omega) << "\n";
  }
  if (s.noise) {
    const auto& n = *s.noise;
    os << "\n[noise]\nform = " << n.form << "\n";
    if (n.form != "zero") os << "c = " << format_double(n.c) << "\n";
    if (n.form == "power_tail") os << "p = " << format_double(n.p) << "\n";
  }
  const auto& r = s.run;
  os << "\n[run]\nxi = " << format_double(r.xi) << "\nhorizon = " << format_double(r.horizon)
     << "\nrtol = " << format_double(r.rtol) << "\natol = " << format_double(r.atol)
     << "\ntol_lambda = " << format_double(r.tol_lambda) << "\ndrift_tol = " << format_double(r.drift_tol)
     << "\nc_bound = " << format_double(r.c_bound) << "\n";
  if (s.noise) {
    os << "paths = " << r.paths << "\n";
    if (r.seed) os << "seed = " << *r.seed << "\n";
    os << "n_seg = " << r.n_seg << "\ndt_max = " << format_double(r.dt_max) << "\n";
  }
  std::string formats;
  if (s.output.csv) formats = "csv";
  if (s.output.json) formats += formats.empty() ? "json" : ",json";
  os << "\n[output]\nformats = " << formats << "\n";
  return os.str();
}

NonlinearitySpec build_nonlinearity(const Scenario& s) {
  const auto& nl = s.nonlinearity;
  if (nl.kind == "power") return NonlinearitySpec::power(nl.beta);
  if (nl.kind == "linear") return NonlinearitySpec::linear();
  if (nl.kind == "flat_exponential") return NonlinearitySpec::flat_exponential();
  const auto path = std::filesystem::path(nl.table).is_absolute() ? std::filesystem::path(nl.table)
                                                                  : s.base_dir / nl.table;
  return NonlinearitySpec::from_csv(path.string());
}

PerturbationSpec build_perturbation(const Scenario& s) {
  if (!s.perturbation) return PerturbationSpec::zero();
  const auto& p = *s.perturbation;
  if (p.form == "power_tail") return PerturbationSpec::power_tail(p.c, p.q);
  if (p.form == "oscillatory") return PerturbationSpec::oscillatory(p.c, p.q, p.omega);
  return PerturbationSpec::zero();
}

NoiseSpec build_noise(const Scenario& s) {
  if (!s.noise) return NoiseSpec::zero();
  const auto& n = *s.noise;
  if (n.form == "power_tail") return NoiseSpec::power_tail(n.c, n.p);
  if (n.form == "constant") return NoiseSpec::constant(n.c);
  return NoiseSpec::zero();
}

}  // namespace decaylab
