#include "unisam/harness/config.hpp"

#include "toml.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace unisam::harness {

std::string to_string(SamplingKind kind) {
  switch (kind) {
    case SamplingKind::uniform: return "uniform";
    case SamplingKind::importance: return "importance";
    case SamplingKind::single_element: return "single_element";
    case SamplingKind::tau_nice: return "tau_nice";
    case SamplingKind::full_batch: return "full_batch";
  }
  return "?";
}

SamplingKind sampling_kind_from_string(const std::string& name) {
  for (auto k : {SamplingKind::uniform, SamplingKind::importance, SamplingKind::single_element,
                 SamplingKind::tau_nice, SamplingKind::full_batch})
    if (to_string(k) == name) return k;
  throw ConfigError("sampling.kind", "unknown sampling '" + name + "'");
}

std::string to_string(StepSource source) {
  switch (source) {
    case StepSource::pl_constant: return "pl_constant";
    case StepSource::pl_decreasing: return "pl_decreasing";
    case StepSource::nonconvex: return "nonconvex";
    case StepSource::manual: return "manual";
  }
  return "?";
}

StepSource step_source_from_string(const std::string& name) {
  for (auto s : {StepSource::pl_constant, StepSource::pl_decreasing, StepSource::nonconvex,
                 StepSource::manual})
    if (to_string(s) == name) return s;
  throw ConfigError("steps.source", "unknown step source '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (id.empty()) throw ConfigError("experiment.id", "must not be empty");
  if (!problem.file) problem.design.validate();
  if (sampling.kinds.empty()) throw ConfigError("sampling.kind", "no sampling scheme given");
  for (auto k : sampling.kinds) {
    if (k == SamplingKind::single_element && sampling.probabilities.empty())
      throw ConfigError("sampling.probabilities", "single_element sampling needs probabilities");
    if (k == SamplingKind::tau_nice && sampling.tau < 1)
      throw ConfigError("sampling.tau", "must be >= 1");
  }
  if (sampling.importance_floor && !(*sampling.importance_floor > 0.0))
    throw ConfigError("sampling.importance_floor", "must be > 0");
  if (steps.sources.empty()) throw ConfigError("steps.source", "no step source given");
  if (!(steps.rho_fraction > 0.0 && steps.rho_fraction < 1.0))
    throw ConfigError("steps.rho_fraction", "must lie in (0, 1)");
  for (auto s : steps.sources) {
    if (s == StepSource::manual && (!steps.rho || !steps.gamma))
      throw ConfigError("steps", "manual steps need both rho and gamma");
    if (s == StepSource::nonconvex && !steps.eps)
      throw ConfigError("steps.eps", "non-convex steps need eps");
  }
  const bool explicit_er = steps.er_A || steps.er_B || steps.er_C;
  if (explicit_er && !(steps.er_A && steps.er_B && steps.er_C))
    throw ConfigError("steps", "an explicit ER triple needs all of er_A, er_B, er_C");
  if (explicit_er && steps.er_preset)
    throw ConfigError("steps.er_preset", "give either a preset or an explicit triple, not both");
  if (lambda.kind == LambdaKind::constant) {
    if (lambda.values.empty()) throw ConfigError("lambda.values", "no lambda given");
    for (double l : lambda.values)
      if (!(l >= 0.0 && l <= 1.0))
        throw ConfigError("lambda.values", "lambda = " + std::to_string(l) + " is outside [0, 1]");
  }
  if (run.trials < 1) throw ConfigError("run.trials", "must be >= 1");
  if (run.epochs < 1) throw ConfigError("run.epochs", "must be >= 1");
  if (run.iters_per_epoch && *run.iters_per_epoch < 1)
    throw ConfigError("run.iters_per_epoch", "must be >= 1");
  if (run.record_every_epochs < 1) throw ConfigError("run.record_every_epochs", "must be >= 1");
  if (run.record_every && *run.record_every < 1) throw ConfigError("run.record_every", "must be >= 1");
  if (run.vasso_theta && !(*run.vasso_theta > 0.0 && *run.vasso_theta <= 1.0))
    throw ConfigError("run.vasso_theta", "must lie in (0, 1]");
  if (!(verify.er_scale >= 0.0)) throw ConfigError("verify.er_scale", "must be >= 0");
  if (verify.trials < 2) throw ConfigError("verify.trials", "must be >= 2");
}

namespace {

// ---------------------------------------------------------------------------
// TOML -> config

using Field = std::function<void(const toml::node&, const std::string&)>;
using Section = std::map<std::string, Field>;

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError(field, what);
}

double get_double(const toml::node& n, const std::string& f) {
  if (auto v = n.value<double>()) return *v;
  bad(f, "expected a number");
}

std::size_t get_count(const toml::node& n, const std::string& f) {
  auto v = n.value<std::int64_t>();
  if (!v || !n.is_integer()) bad(f, "expected an integer");
  if (*v < 0) bad(f, "must be >= 0");
  return static_cast<std::size_t>(*v);
}

std::uint64_t get_seed(const toml::node& n, const std::string& f) {
  // TOML integers are signed 64-bit; seeds above 2^63 are written as strings.
  if (auto s = n.value<std::string>()) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(*s, &pos, 0);
      if (pos != s->size()) bad(f, "not an integer: " + *s);
      return v;
    } catch (const std::logic_error&) {
      bad(f, "not an integer: " + *s);
    }
  }
  return static_cast<std::uint64_t>(get_count(n, f));
}

std::string get_string(const toml::node& n, const std::string& f) {
  if (auto v = n.value<std::string>()) return *v;
  bad(f, "expected a string");
}

bool get_bool(const toml::node& n, const std::string& f) {
  if (auto v = n.value<bool>()) return *v;
  bad(f, "expected true or false");
}

/// A scalar or an array of scalars.
template <class T, class Get>
std::vector<T> get_list(const toml::node& n, const std::string& f, Get get) {
  std::vector<T> out;
  if (const auto* arr = n.as_array()) {
    for (std::size_t i = 0; i < arr->size(); ++i)
      out.push_back(get((*arr)[i], f + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(get(n, f));
  }
  return out;
}

/// Comma-separated numbers are also accepted so the list can come from a flag.
std::vector<double> get_doubles(const toml::node& n, const std::string& f) {
  if (auto s = n.value<std::string>()) {
    std::vector<double> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size()) bad(f, "not a number: '" + item + "'");
      } catch (const std::logic_error&) {
        bad(f, "not a number: '" + item + "'");
      }
    }
    return out;
  }
  return get_list<double>(n, f, get_double);
}

std::vector<std::string> get_strings(const toml::node& n, const std::string& f) {
  if (auto s = n.value<std::string>()) {
    std::vector<std::string> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(' ');
      const auto e = item.find_last_not_of(' ');
      out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
  }
  return get_list<std::string>(n, f, get_string);
}

ExperimentConfig from_table(const toml::table& root) {
  ExperimentConfig c;
  std::map<std::string, Section> sections;

  sections["experiment"] = {
      {"id", [&](auto& n, auto& f) { c.id = get_string(n, f); }},
      {"preset", [&](auto& n, auto& f) { c.preset = get_string(n, f); }},
  };

  auto& P = c.problem;
  sections["problem"] = {
      {"family", [&](auto& n, auto& f) {
         try {
           P.family = family_from_string(get_string(n, f));
         } catch (const ConfigError&) {
           throw;
         } catch (const std::exception& e) {
           bad(f, e.what());
         }
       }},
      {"n", [&](auto& n, auto& f) { P.design.n = get_count(n, f); }},
      {"d", [&](auto& n, auto& f) { P.design.d = get_count(n, f); }},
      {"cond", [&](auto& n, auto& f) { P.design.cond = get_double(n, f); }},
      {"lambda_r", [&](auto& n, auto& f) { P.design.lambda_r = get_double(n, f); }},
      {"seed", [&](auto& n, auto& f) { P.design.seed = get_seed(n, f); }},
      {"spectrum", [&](auto& n, auto& f) {
         try {
           P.design.spectrum.kind = spectrum_kind_from_string(get_string(n, f));
         } catch (const ConfigError&) {
           throw;
         } catch (const std::exception& e) {
           bad(f, e.what());
         }
       }},
      {"spectrum_lo", [&](auto& n, auto& f) { P.design.spectrum.lo = get_double(n, f); }},
      {"spectrum_hi", [&](auto& n, auto& f) { P.design.spectrum.hi = get_double(n, f); }},
      {"file", [&](auto& n, auto& f) { P.file = get_string(n, f); }},
  };

  auto& S = c.sampling;
  sections["sampling"] = {
      {"kind", [&](auto& n, auto& f) {
         S.kinds.clear();
         for (const auto& s : get_strings(n, f)) S.kinds.push_back(sampling_kind_from_string(s));
       }},
      {"probabilities", [&](auto& n, auto& f) { S.probabilities = get_doubles(n, f); }},
      {"tau", [&](auto& n, auto& f) { S.tau = get_count(n, f); }},
      {"importance_floor", [&](auto& n, auto& f) { S.importance_floor = get_double(n, f); }},
  };

  auto& T = c.steps;
  sections["steps"] = {
      {"source", [&](auto& n, auto& f) {
         T.sources.clear();
         for (const auto& s : get_strings(n, f)) T.sources.push_back(step_source_from_string(s));
       }},
      {"rho_fraction", [&](auto& n, auto& f) { T.rho_fraction = get_double(n, f); }},
      {"rho_cap", [&](auto& n, auto& f) { T.rho_cap = get_double(n, f); }},
      {"gamma_cap", [&](auto& n, auto& f) { T.gamma_cap = get_double(n, f); }},
      {"rho", [&](auto& n, auto& f) { T.rho = get_double(n, f); }},
      {"gamma", [&](auto& n, auto& f) { T.gamma = get_double(n, f); }},
      {"eps", [&](auto& n, auto& f) { T.eps = get_double(n, f); }},
      {"smoothness", [&](auto& n, auto& f) {
         if (n.is_number()) {
           char buf[40];
           std::snprintf(buf, sizeof buf, "%.17g", get_double(n, f));
           T.smoothness = buf;
         } else {
           T.smoothness = get_string(n, f);
         }
       }},
      {"convexity_hint", [&](auto& n, auto& f) { T.convexity_hint = get_bool(n, f); }},
      {"er_preset", [&](auto& n, auto& f) { T.er_preset = get_string(n, f); }},
      {"er_sigma2", [&](auto& n, auto& f) { T.er_params.sigma2 = get_double(n, f); }},
      {"er_expected_smoothness",
       [&](auto& n, auto& f) { T.er_params.expected_smoothness = get_double(n, f); }},
      {"er_rho", [&](auto& n, auto& f) { T.er_params.rho = get_double(n, f); }},
      {"er_alpha", [&](auto& n, auto& f) { T.er_params.alpha = get_double(n, f); }},
      {"er_A", [&](auto& n, auto& f) { T.er_A = get_double(n, f); }},
      {"er_B", [&](auto& n, auto& f) { T.er_B = get_double(n, f); }},
      {"er_C", [&](auto& n, auto& f) { T.er_C = get_double(n, f); }},
  };

  auto& L = c.lambda;
  sections["lambda"] = {
      {"kind", [&](auto& n, auto& f) {
         try {
           L.kind = lambda_kind_from_string(get_string(n, f));
         } catch (const ConfigError& e) {
           bad(f, e.what());
         }
       }},
      {"values", [&](auto& n, auto& f) { L.values = get_doubles(n, f); }},
  };

  auto& R = c.run;
  sections["run"] = {
      {"trials", [&](auto& n, auto& f) { R.trials = get_count(n, f); }},
      {"epochs", [&](auto& n, auto& f) { R.epochs = get_count(n, f); }},
      {"iters_per_epoch", [&](auto& n, auto& f) { R.iters_per_epoch = get_count(n, f); }},
      {"base_seed", [&](auto& n, auto& f) { R.base_seed = get_seed(n, f); }},
      {"record_every_epochs", [&](auto& n, auto& f) { R.record_every_epochs = get_count(n, f); }},
      {"record_every", [&](auto& n, auto& f) { R.record_every = get_count(n, f); }},
      {"vasso_theta", [&](auto& n, auto& f) { R.vasso_theta = get_double(n, f); }},
      {"output", [&](auto& n, auto& f) { R.output = get_string(n, f); }},
  };

  auto& V = c.verify;
  sections["verify"] = {
      {"er_scale", [&](auto& n, auto& f) { V.er_scale = get_double(n, f); }},
      {"points", [&](auto& n, auto& f) { V.points = get_count(n, f); }},
      {"draws", [&](auto& n, auto& f) { V.draws = get_count(n, f); }},
      {"trials", [&](auto& n, auto& f) { V.trials = get_count(n, f); }},
      {"envelope_standard_errors",
       [&](auto& n, auto& f) { V.envelope_standard_errors = get_double(n, f); }},
  };

  for (auto&& [key, node] : root) {
    const std::string sname(key.str());
    auto sec = sections.find(sname);
    if (sec == sections.end()) bad(sname, "unknown section");
    const auto* tbl = node.as_table();
    if (!tbl) bad(sname, "expected a table");
    for (auto&& [k, v] : *tbl) {
      const std::string field = sname + "." + std::string(k.str());
      auto it = sec->second.find(std::string(k.str()));
      if (it == sec->second.end()) bad(field, "unknown key");
      it->second(v, field);
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// config -> TOML

template <class T, class F>
toml::array to_array(const std::vector<T>& xs, F f) {
  toml::array a;
  for (const auto& x : xs) a.push_back(f(x));
  return a;
}

std::string seed_string(std::uint64_t s) { return std::to_string(s); }

toml::table to_table(const ExperimentConfig& c) {
  toml::table root;

  root.insert_or_assign("experiment", toml::table{{"id", c.id}, {"preset", c.preset}});

  toml::table p;
  p.insert_or_assign("family", to_string(c.problem.family));
  p.insert_or_assign("n", static_cast<std::int64_t>(c.problem.design.n));
  p.insert_or_assign("d", static_cast<std::int64_t>(c.problem.design.d));
  p.insert_or_assign("cond", c.problem.design.cond);
  p.insert_or_assign("lambda_r", c.problem.design.lambda_r);
  p.insert_or_assign("seed", seed_string(c.problem.design.seed));
  p.insert_or_assign("spectrum", to_string(c.problem.design.spectrum.kind));
  p.insert_or_assign("spectrum_lo", c.problem.design.spectrum.lo);
  p.insert_or_assign("spectrum_hi", c.problem.design.spectrum.hi);
  if (c.problem.file) p.insert_or_assign("file", *c.problem.file);
  root.insert_or_assign("problem", std::move(p));

  toml::table s;
  s.insert_or_assign("kind", to_array(c.sampling.kinds, [](auto k) { return to_string(k); }));
  if (!c.sampling.probabilities.empty())
    s.insert_or_assign("probabilities", to_array(c.sampling.probabilities, [](double x) { return x; }));
  s.insert_or_assign("tau", static_cast<std::int64_t>(c.sampling.tau));
  if (c.sampling.importance_floor) s.insert_or_assign("importance_floor", *c.sampling.importance_floor);
  root.insert_or_assign("sampling", std::move(s));

  const auto& T = c.steps;
  toml::table t;
  t.insert_or_assign("source", to_array(T.sources, [](auto k) { return to_string(k); }));
  t.insert_or_assign("rho_fraction", T.rho_fraction);
  if (T.rho_cap) t.insert_or_assign("rho_cap", *T.rho_cap);
  if (T.gamma_cap) t.insert_or_assign("gamma_cap", *T.gamma_cap);
  if (T.rho) t.insert_or_assign("rho", *T.rho);
  if (T.gamma) t.insert_or_assign("gamma", *T.gamma);
  if (T.eps) t.insert_or_assign("eps", *T.eps);
  t.insert_or_assign("smoothness", T.smoothness);
  t.insert_or_assign("convexity_hint", T.convexity_hint);
  if (T.er_preset) {
    t.insert_or_assign("er_preset", *T.er_preset);
    t.insert_or_assign("er_sigma2", T.er_params.sigma2);
    t.insert_or_assign("er_expected_smoothness", T.er_params.expected_smoothness);
    t.insert_or_assign("er_rho", T.er_params.rho);
    t.insert_or_assign("er_alpha", T.er_params.alpha);
  }
  if (T.er_A) t.insert_or_assign("er_A", *T.er_A);
  if (T.er_B) t.insert_or_assign("er_B", *T.er_B);
  if (T.er_C) t.insert_or_assign("er_C", *T.er_C);
  root.insert_or_assign("steps", std::move(t));

  toml::table l;
  l.insert_or_assign("kind", to_string(c.lambda.kind));
  l.insert_or_assign("values", to_array(c.lambda.values, [](double x) { return x; }));
  root.insert_or_assign("lambda", std::move(l));

  const auto& R = c.run;
  toml::table r;
  r.insert_or_assign("trials", static_cast<std::int64_t>(R.trials));
  r.insert_or_assign("epochs", static_cast<std::int64_t>(R.epochs));
  if (R.iters_per_epoch) r.insert_or_assign("iters_per_epoch", static_cast<std::int64_t>(*R.iters_per_epoch));
  r.insert_or_assign("base_seed", seed_string(R.base_seed));
  r.insert_or_assign("record_every_epochs", static_cast<std::int64_t>(R.record_every_epochs));
  if (R.record_every) r.insert_or_assign("record_every", static_cast<std::int64_t>(*R.record_every));
  if (R.vasso_theta) r.insert_or_assign("vasso_theta", *R.vasso_theta);
  r.insert_or_assign("output", R.output);
  root.insert_or_assign("run", std::move(r));

  const auto& V = c.verify;
  root.insert_or_assign(
      "verify", toml::table{{"er_scale", V.er_scale},
                            {"points", static_cast<std::int64_t>(V.points)},
                            {"draws", static_cast<std::int64_t>(V.draws)},
                            {"trials", static_cast<std::int64_t>(V.trials)},
                            {"envelope_standard_errors", V.envelope_standard_errors}});
  return root;
}

toml::table parse_table(const std::string& text, const std::string& origin) {
  try {
    return toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(origin, os.str());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& toml_text) {
  return from_table(parse_table(toml_text, "config"));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_table(parse_table(ss.str(), path));
}

ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                 const std::vector<std::string>& overrides) {
  if (overrides.empty()) return base;
  toml::table root = to_table(base);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must look like section.key=value");
    const std::string path = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    const auto dot = path.find('.');
    if (dot == std::string::npos || path.find('.', dot + 1) != std::string::npos)
      throw ConfigError(path, "override key must look like section.key");
    const std::string sec = path.substr(0, dot), key = path.substr(dot + 1);

    toml::table parsed;
    try {
      parsed = toml::parse("v = " + value);
    } catch (const toml::parse_error&) {
      parsed = toml::table{{"v", value}};
    }
    if (!root.contains(sec)) root.insert_or_assign(sec, toml::table{});
    auto* t = root[sec].as_table();
    if (!t) throw ConfigError(sec, "not a table");
    parsed.get("v")->visit([&](auto&& v) { t->insert_or_assign(key, v); });
  }
  return from_table(root);
}

std::string to_toml(const ExperimentConfig& config) {
  std::ostringstream os;
  os << to_table(config);
  return os.str();
}

}  // namespace unisam::harness
