#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "vortex/experiments.hpp"
#include "vortex/parse.hpp"

namespace vortex {

using nlohmann::json;

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::cfree: return "cfree";
    case ExperimentKind::infinitesimal: return "infinitesimal";
    case ExperimentKind::fluctuation: return "fluctuation";
    case ExperimentKind::ordered: return "ordered";
    case ExperimentKind::indented: return "indented";
    case ExperimentKind::concentration: return "concentration";
  }
  return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
  for (auto k : {ExperimentKind::cfree, ExperimentKind::infinitesimal, ExperimentKind::fluctuation,
                 ExperimentKind::ordered, ExperimentKind::indented, ExperimentKind::concentration})
    if (kind_name(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

ComplexVector VectorSpec::build(std::size_t n) const {
  switch (kind) {
    case Kind::basis:
      if (index >= n) throw ConfigError("vector '" + name + "' = e" + std::to_string(index + 1) + " exceeds N");
      return basis_vector(n, index);
    case Kind::flat: return flat_vector(n);
    case Kind::explicit_values: {
      if (values.size() != n)
        throw ConfigError("vector '" + name + "' has " + std::to_string(values.size()) + " entries, N = " +
                          std::to_string(n));
      ComplexVector v(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) v(Eigen::Index(i)) = values[i];
      if (v.norm() == 0) throw ConfigError("vector '" + name + "' is zero");
      return v / v.norm();
    }
  }
  return {};
}

std::string WordSpec::label() const {
  if (center.empty()) return text;
  std::string tag;
  std::string first = center.begin()->second;
  bool uniform = std::all_of(center.begin(), center.end(), [&](const auto& kv) { return kv.second == first; });
  if (uniform) {
    tag = first;
  } else {
    for (const auto& [f, s] : center) tag += (tag.empty() ? "" : ",") + std::to_string(f) + ":" + s;
  }
  return "c[" + tag + "](" + text + ")";
}

const VectorSpec& ExperimentConfig::vector(const std::string& name) const {
  for (const auto& v : vectors)
    if (v.name == name) return v;
  throw ConfigError("experiment '" + kind_name(kind) + "' needs a vector named '" + name + "'");
}

std::size_t ExperimentConfig::min_trials() const { return kind == ExperimentKind::fluctuation ? 1000 : 2; }

namespace {

std::vector<std::string> required_vectors(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ordered: return {"u", "v"};
    case ExperimentKind::indented: return {"u", "v", "w"};
    default: return {"v"};
  }
}

bool needs_limits(ExperimentKind k) {
  return k == ExperimentKind::infinitesimal || k == ExperimentKind::fluctuation;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dimensions.empty()) throw ConfigError("dimensions must be nonempty");
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    if (dimensions[i] < 4) throw ConfigError("dimensions must be at least 4");
    if (i && dimensions[i] <= dimensions[i - 1]) throw ConfigError("dimensions must be strictly ascending");
  }
  if (trials < min_trials())
    throw ConfigError("trials = " + std::to_string(trials) + " is below the floor of " +
                      std::to_string(min_trials()) + " for a " + kind_name(kind) + " experiment");
  if (!(threshold > 0)) throw ConfigError("threshold must be positive");
  if (words.empty()) throw ConfigError("word list must be nonempty");
  for (Family f : {Family{0}, Family{1}}) {
    auto it = ensembles.find(f);
    if (it == ensembles.end() || it->second.empty())
      throw ConfigError("ensembles for families 0 and 1 are required");
  }
  for (const auto& [f, specs] : ensembles) {
    if (f > 1) throw ConfigError("experiments use families 0 and 1 only");
    for (const auto& s : specs) {
      if (s.kind == EnsembleSpec::Kind::two_spectrum && s.spectrum.empty())
        throw ConfigError("two_spectrum needs a spectrum");
      if (needs_limits(kind) && specs.size() != 1)
        throw ConfigError(kind_name(kind) + " experiments need exactly one matrix per family");
    }
  }
  for (const auto& name : required_vectors(kind)) (void)vector(name);
  for (const auto& w : words) {
    Polynomial<Complex> p;
    try {
      p = parse_as<Complex>(w.text);
    } catch (const ParseError& e) {
      throw ConfigError("word '" + w.text + "': " + e.what());
    }
    for (const auto& [g, c] : p.terms())
      for (const auto& letter : g)
        if (letter.family() > 1 || letter.index() >= ensembles.at(letter.family()).size())
          throw ConfigError("word '" + w.text + "' uses " + to_string(letter) + ", which has no matrix");
    if (w.centered()) {
      if (p.size() != 1 || !(p.terms().begin()->second == Complex(1)) || p.terms().begin()->first.empty())
        throw ConfigError("centered word '" + w.text + "' must be a single nonempty monomial");
      for (const auto& [f, s] : w.center)
        if (s != "trace" && s != "limit") (void)vector(s);
    }
  }
  for (const auto& [i, j] : pairs)
    if (i >= words.size() || j >= words.size()) throw ConfigError("pair index out of range");
  if (kind == ExperimentKind::fluctuation && pairs.empty()) throw ConfigError("fluctuation needs word pairs");
  if (kind == ExperimentKind::indented && dimensions.front() < 4) throw ConfigError("indented needs N >= 4");
  if (!(variance_tolerance > 0)) throw ConfigError("variance_tolerance must be positive");
  if (!(slope_min < slope_max)) throw ConfigError("slope range is empty");
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

EnsembleSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("ensemble spec must be an object");
  std::string type = j.at("type").get<std::string>();
  EnsembleSpec s;
  if (type == "spiked_diagonal") {
    s = EnsembleSpec::spiked_diagonal(j.at("theta").get<double>(), j.at("a").get<double>());
  } else if (type == "two_spectrum") {
    std::map<std::size_t, double> spikes;
    if (j.contains("spikes"))
      for (const auto& [k, v] : j.at("spikes").items()) spikes[std::stoul(k)] = v.get<double>();
    s = EnsembleSpec::two_spectrum(j.at("spectrum").get<std::vector<double>>(), std::move(spikes));
  } else if (type == "shift") {
    s = EnsembleSpec::shift();
  } else if (type == "projection") {
    s = EnsembleSpec::projection(j.at("rank").get<std::size_t>());
  } else {
    throw ConfigError("unknown ensemble type '" + type + "'");
  }
  s.mixing = get_or(j, "mixing", 0.0);
  s.circulant = get_or(j, "circulant", false);
  return s;
}

json spec_to_json(const EnsembleSpec& s) {
  json j;
  switch (s.kind) {
    case EnsembleSpec::Kind::spiked_diagonal:
      j = {{"type", "spiked_diagonal"}, {"theta", s.theta}, {"a", s.a}};
      break;
    case EnsembleSpec::Kind::two_spectrum: {
      j = {{"type", "two_spectrum"}, {"spectrum", s.spectrum}};
      if (!s.spikes.empty()) {
        json sp = json::object();
        for (const auto& [i, x] : s.spikes) sp[std::to_string(i)] = x;
        j["spikes"] = sp;
      }
      break;
    }
    case EnsembleSpec::Kind::shift: j = {{"type", "shift"}}; break;
    case EnsembleSpec::Kind::projection: j = {{"type", "projection"}, {"rank", s.rank}}; break;
  }
  if (s.mixing != 0) j["mixing"] = s.mixing;
  if (s.circulant) j["circulant"] = true;
  return j;
}

VectorSpec vector_from_json(const std::string& name, const json& j) {
  VectorSpec v;
  v.name = name;
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "flat") {
      v.kind = VectorSpec::Kind::flat;
    } else if (s.size() > 1 && s[0] == 'e' && std::all_of(s.begin() + 1, s.end(), ::isdigit)) {
      std::size_t i = std::stoul(s.substr(1));
      if (i == 0) throw ConfigError("basis vectors are numbered from e1");
      v.kind = VectorSpec::Kind::basis;
      v.index = i - 1;
    } else {
      throw ConfigError("vector '" + name + "': expected \"e<i>\", \"flat\" or a coordinate list");
    }
  } else if (j.is_array()) {
    v.kind = VectorSpec::Kind::explicit_values;
    for (const auto& x : j) {
      if (x.is_array()) v.values.emplace_back(x.at(0).get<double>(), x.at(1).get<double>());
      else v.values.emplace_back(x.get<double>(), 0.0);
    }
  } else {
    throw ConfigError("vector '" + name + "' has an unsupported form");
  }
  return v;
}

json vector_to_json(const VectorSpec& v) {
  switch (v.kind) {
    case VectorSpec::Kind::basis: return "e" + std::to_string(v.index + 1);
    case VectorSpec::Kind::flat: return "flat";
    case VectorSpec::Kind::explicit_values: {
      json a = json::array();
      for (const auto& z : v.values) a.push_back(json::array({z.real(), z.imag()}));
      return a;
    }
  }
  return nullptr;
}

WordSpec word_from_json(const json& j) {
  WordSpec w;
  if (j.is_string()) {
    w.text = j.get<std::string>();
    return w;
  }
  w.text = j.at("word").get<std::string>();
  if (j.contains("center")) {
    const auto& c = j.at("center");
    if (c.is_string()) {
      w.center[0] = w.center[1] = c.get<std::string>();
    } else {
      for (const auto& [k, v] : c.items()) w.center[static_cast<Family>(std::stoul(k))] = v.get<std::string>();
    }
  }
  return w;
}

json word_to_json(const WordSpec& w) {
  if (!w.centered()) return w.text;
  json c = json::object();
  for (const auto& [f, s] : w.center) c[std::to_string(f)] = s;
  return {{"word", w.text}, {"center", c}};
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("preset")) cfg = preset(j.at("preset").get<std::string>());
    if (j.contains("kind")) cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    cfg.name = get_or(j, "name", cfg.name);
    if (j.contains("dimensions")) cfg.dimensions = j.at("dimensions").get<std::vector<std::size_t>>();
    cfg.trials = get_or(j, "trials", cfg.trials);
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.threshold = get_or(j, "threshold", cfg.threshold);
    if (j.contains("ensembles")) {
      cfg.ensembles.clear();
      for (const auto& [k, v] : j.at("ensembles").items()) {
        auto& list = cfg.ensembles[static_cast<Family>(std::stoul(k))];
        if (v.is_array())
          for (const auto& s : v) list.push_back(spec_from_json(s));
        else
          list.push_back(spec_from_json(v));
      }
    }
    if (j.contains("vectors")) {
      cfg.vectors.clear();
      for (const auto& [k, v] : j.at("vectors").items()) cfg.vectors.push_back(vector_from_json(k, v));
    }
    if (j.contains("words")) {
      cfg.words.clear();
      for (const auto& w : j.at("words")) cfg.words.push_back(word_from_json(w));
    }
    if (j.contains("pairs")) {
      cfg.pairs.clear();
      for (const auto& p : j.at("pairs")) cfg.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
    cfg.isotropy_powers = get_or(j, "isotropy_powers", cfg.isotropy_powers);
    cfg.variance_tolerance = get_or(j, "variance_tolerance", cfg.variance_tolerance);
    if (j.contains("slope_range")) {
      auto r = j.at("slope_range").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("slope_range needs two numbers");
      cfg.slope_min = r[0];
      cfg.slope_max = r[1];
    }
    cfg.vector_slope_max = get_or(j, "vector_slope_max", cfg.vector_slope_max);
    if (j.contains("output")) {
      cfg.csv_path = get_or<std::string>(j.at("output"), "csv", cfg.csv_path);
      cfg.json_path = get_or<std::string>(j.at("output"), "json", cfg.json_path);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: bad number: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = kind_name(cfg.kind);
  j["name"] = cfg.name;
  j["dimensions"] = cfg.dimensions;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["threshold"] = cfg.threshold;
  json ens = json::object();
  for (const auto& [f, specs] : cfg.ensembles) {
    json list = json::array();
    for (const auto& s : specs) list.push_back(spec_to_json(s));
    ens[std::to_string(f)] = list;
  }
  j["ensembles"] = ens;
  json vecs = json::object();
  for (const auto& v : cfg.vectors) vecs[v.name] = vector_to_json(v);
  j["vectors"] = vecs;
  json words = json::array();
  for (const auto& w : cfg.words) words.push_back(word_to_json(w));
  j["words"] = words;
  if (!cfg.pairs.empty()) {
    json pairs = json::array();
    for (const auto& [a, b] : cfg.pairs) pairs.push_back({a, b});
    j["pairs"] = pairs;
  }
  j["isotropy_powers"] = cfg.isotropy_powers;
  j["variance_tolerance"] = cfg.variance_tolerance;
  j["slope_range"] = {cfg.slope_min, cfg.slope_max};
  j["vector_slope_max"] = cfg.vector_slope_max;
  if (!cfg.csv_path.empty() || !cfg.json_path.empty()) j["output"] = {{"csv", cfg.csv_path}, {"json", cfg.json_path}};
  return j.dump(2);
}

namespace {

constexpr std::uint64_t kPresetSeed = 20261016;

WordSpec raw(std::string text) { return WordSpec{std::move(text), {}}; }
WordSpec centered(std::string text, const std::string& state) {
  return WordSpec{std::move(text), {{0, state}, {1, state}}};
}

/// A: diagonal, bulk {0.5, 1, 2, 2.5}, entry 0 moved to 1.6 (near the bulk
/// mean 1.5). B: bulk {-1, 0, 1, 2} with entry 0 at 1.2, conjugated by the
/// DFT so that e1 is isotropic for B.
ExperimentConfig cfree_base() {
  ExperimentConfig c;
  c.kind = ExperimentKind::cfree;
  c.dimensions = {32, 64, 128, 256};
  c.trials = 2000;
  c.seed = kPresetSeed;
  c.ensembles[0] = {EnsembleSpec::two_spectrum({0.5, 1, 2, 2.5}, {{0, 1.6}})};
  auto b = EnsembleSpec::two_spectrum({-1, 0, 1, 2}, {{0, 1.2}});
  b.circulant = true;
  c.ensembles[1] = {b};
  c.vectors = {VectorSpec{"v", VectorSpec::Kind::basis, 0, {}}};
  c.words = {raw("X0"),
             raw("Y0"),
             raw("X0*Y0"),
             raw("X0^2*Y0"),
             raw("Y0*X0*Y0"),
             raw("X0*Y0*X0*Y0"),
             raw("X0^2*Y0^2"),
             raw("Y0*X0^2*Y0"),
             centered("X0*Y0", "limit"),
             centered("X0*Y0", "trace"),
             centered("Y0*X0*Y0", "trace"),
             centered("X0*Y0*X0*Y0", "trace")};
  return c;
}

/// Both families diagonal with their spike at e1 = v: the aligned model.
/// The spike replaces a bulk entry equal to the bulk mean, so the 1/N^2 term
/// of E tr(X^j Y^k) vanishes and the two-term fit has no truncation bias there.
void aligned_spikes(ExperimentConfig& c) {
  c.ensembles[0] = {EnsembleSpec::two_spectrum({1.5, 0.5, 1.5, 2.5}, {{0, 2.0}})};
  c.ensembles[1] = {EnsembleSpec::two_spectrum({0.5, -1, 0.5, 2}, {{0, 1.5}})};
  c.vectors = {VectorSpec{"v", VectorSpec::Kind::basis, 0, {}}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"cfree-basic", "cfree-strong-spike", "infinitesimal-basic", "fluctuation-basic",
          "ordered-basic", "indented-basic", "indented-unmatched", "concentration-basic", "smoke"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "cfree-basic") {
    c = cfree_base();
  } else if (name == "cfree-strong-spike") {
    c = cfree_base();
    c.ensembles[0] = {EnsembleSpec::two_spectrum({0.5, 1, 2, 2.5}, {{0, 4.0}})};
  } else if (name == "infinitesimal-basic") {
    c = cfree_base();
    c.kind = ExperimentKind::infinitesimal;
    aligned_spikes(c);
    c.words = {raw("X0"),
               raw("Y0^2"),
               raw("X0*Y0"),
               raw("X0^2*Y0"),
               raw("X0*Y0*X0*Y0"),
               raw("X0^2*Y0^2"),
               centered("X0*Y0", "limit"),
               centered("X0*Y0*X0*Y0", "limit"),
               centered("X0*Y0", "trace"),
               centered("X0^2*Y0", "trace"),
               centered("X0*Y0*X0*Y0", "trace")};
  } else if (name == "fluctuation-basic") {
    c = cfree_base();
    c.kind = ExperimentKind::fluctuation;
    aligned_spikes(c);
    c.dimensions = {128};
    c.trials = 10000;
    c.words = {centered("X0*Y0*X0*Y0", "limit"), raw("X0^2*Y0^2"), raw("X0*Y0")};
    c.pairs = {{0, 0}, {1, 1}, {2, 2}, {0, 1}};
  } else if (name == "ordered-basic") {
    c.kind = ExperimentKind::ordered;
    c.dimensions = {64, 128, 256};
    c.trials = 2000;
    c.seed = kPresetSeed;
    // Fixed entries chosen to minimize max_k |tr(M^k) - x^k| / sd(lambda^k), k <= 3.
    c.ensembles[0] = {EnsembleSpec::two_spectrum({0.5, 1, 2, 2.5}, {{0, 1.7}})};
    c.ensembles[1] = {EnsembleSpec::two_spectrum({0, 1, 2, 3}, {{1, 1.8}})};
    c.vectors = {VectorSpec{"u", VectorSpec::Kind::basis, 0, {}}, VectorSpec{"v", VectorSpec::Kind::basis, 1, {}}};
    c.words = {raw("X0"), raw("Y0"), raw("X0*Y0"), raw("Y0*X0"), raw("X0^2*Y0"), raw("X0*Y0*X0*Y0"),
               WordSpec{"X0*Y0", {{0, "trace"}, {1, "trace"}}},
               WordSpec{"X0*Y0*X0*Y0", {{0, "trace"}, {1, "trace"}}},
               WordSpec{"Y0*X0*Y0", {{0, "trace"}, {1, "trace"}}}};
  } else if (name == "indented-basic") {
    c.kind = ExperimentKind::indented;
    c.dimensions = {64, 128, 256};
    c.trials = 2000;
    c.seed = kPresetSeed;
    // The two fixed entries of each matrix match its first three limit
    // moments: x + y = 2 tr M, x^2 + y^2 = 2 tr M^2, x^3 + y^3 = 2 tr M^3.
    c.ensembles[0] = {EnsembleSpec::two_spectrum({0.5, 1, 2, 2.5}, {{0, 1.5 + std::sqrt(0.625)}, {1, 1.5 - std::sqrt(0.625)}})};
    c.ensembles[1] = {EnsembleSpec::two_spectrum({-1, 0, 1, 2}, {{0, (1 + std::sqrt(5.0)) / 2}, {2, (1 - std::sqrt(5.0)) / 2}})};
    c.vectors = {VectorSpec{"u", VectorSpec::Kind::basis, 0, {}}, VectorSpec{"v", VectorSpec::Kind::basis, 1, {}},
                 VectorSpec{"w", VectorSpec::Kind::basis, 2, {}}};
    c.words = {raw("X0"), raw("Y0"), raw("X0*Y0"), raw("Y0*X0"), raw("X0^2*Y0"), raw("X0*Y0*X0*Y0"),
               centered("X0*Y0", "trace"), centered("X0*Y0*X0*Y0", "trace")};
  } else if (name == "indented-unmatched") {
    c = preset("indented-basic");
    c.ensembles[0] = {EnsembleSpec::two_spectrum({0.5, 1, 2, 2.5}, {{0, 1.6}, {1, 1.3}})};
    c.ensembles[1] = {EnsembleSpec::two_spectrum({-1, 0, 1, 2}, {{0, 0.4}, {2, 0.7}})};
  } else if (name == "concentration-basic") {
    c = cfree_base();
    c.kind = ExperimentKind::concentration;
    c.trials = 400;
    c.slope_min = -1.6;
    c.slope_max = -0.8;
    c.words = {raw("X0"), raw("X0*Y0"), raw("X0*Y0*X0*Y0"), raw("X0^2*Y0^2"), raw("Y0*X0*Y0"),
               centered("X0*Y0*X0*Y0", "limit")};
  } else if (name == "smoke") {
    c = cfree_base();
    c.dimensions = {8, 16, 32};
    c.trials = 40;
    c.words = {raw("X0*Y0"), raw("X0*Y0*X0*Y0"), centered("X0*Y0", "trace")};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.name = name;
  return c;
}

}  // namespace vortex
