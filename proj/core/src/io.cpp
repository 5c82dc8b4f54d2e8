#include "ust/io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

namespace ust {

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ConfigError(fmt::format("{}: expected a mapping", where));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
  }
}

template <class T>
void read_optional(const YAML::Node& node, const char* key, std::optional<T>& out,
                   const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (v.IsNull()) {
    out.reset();
    return;
  }
  T tmp{};
  read(node, key, tmp, where);
  out = tmp;
}

YAML::Node parse_text(const std::string& text) {
  try {
    YAML::Node root = YAML::Load(text);
    if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
    return root;
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("YAML parse error: {}", e.what()));
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view to_string(OracleKind k) { return k == OracleKind::kArchive ? "archive" : "scripted"; }

OracleKind parse_oracle_kind(const std::string& s) {
  if (s == "scripted") return OracleKind::kScripted;
  if (s == "archive") return OracleKind::kArchive;
  throw ConfigError(fmt::format("oracle.kind: unknown oracle '{}'", s));
}

// Emits every double with enough digits to read back bit-identically.
YAML::Emitter& emit_double(YAML::Emitter& out, double v) {
  out << YAML::Value << fmt::format("{}", v);
  return out;
}

TargetState read_box(const YAML::Node& n, const std::string& where) {
  check_keys(n, {"frame", "cx", "cy", "w", "h"}, where);
  TargetState b;
  for (const char* key : {"cx", "cy", "w", "h"}) {
    if (!n[key]) throw ConfigError(fmt::format("{}: missing '{}'", where, key));
  }
  read(n, "cx", b.cx, where);
  read(n, "cy", b.cy, where);
  read(n, "w", b.w, where);
  read(n, "h", b.h, where);
  return b;
}

ObjectPath read_path(const YAML::Node& n, const std::string& where) {
  if (!n || !n.IsSequence() || n.size() == 0) {
    throw ConfigError(fmt::format("{}: expected a non-empty list of waypoints", where));
  }
  ObjectPath p;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string w = fmt::format("{}[{}]", where, i);
    if (!n[i]["frame"]) throw ConfigError(fmt::format("{}: missing 'frame'", w));
    Waypoint wp;
    read(n[i], "frame", wp.frame, w);
    wp.box = read_box(n[i], w);
    p.waypoints.push_back(wp);
  }
  return p;
}

void emit_path(YAML::Emitter& out, const ObjectPath& p) {
  out << YAML::BeginSeq;
  for (const Waypoint& w : p.waypoints) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "frame" << YAML::Value << w.frame;
    out << YAML::Key << "cx";
    emit_double(out, w.box.cx) << YAML::Key << "cy";
    emit_double(out, w.box.cy) << YAML::Key << "w";
    emit_double(out, w.box.w) << YAML::Key << "h";
    emit_double(out, w.box.h);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

}  // namespace

TrackerConfig parse_tracker_config(const std::string& yaml_text) {
  const YAML::Node root = parse_text(yaml_text);
  const std::string w = "config";
  check_keys(root,
             {"k", "m", "tau_l", "tau_u", "tau_p", "tau_a", "delta", "alpha0", "budget_cap",
              "feature_dim", "histogram_bins", "sampler", "oracle", "init"},
             w);
  TrackerConfig c;
  read(root, "k", c.k, w);
  read(root, "m", c.m, w);
  read(root, "tau_l", c.tau_l, w);
  read(root, "tau_u", c.tau_u, w);
  read(root, "tau_p", c.tau_p, w);
  read(root, "tau_a", c.tau_a, w);
  read(root, "delta", c.delta, w);
  read(root, "alpha0", c.alpha0, w);
  read_optional(root, "budget_cap", c.budget_cap, w);
  read(root, "feature_dim", c.feature_dim, w);
  read(root, "histogram_bins", c.histogram_bins, w);
  if (const YAML::Node s = root["sampler"]) {
    const std::string ws = "config.sampler";
    check_keys(s,
               {"n", "n_prime", "sigma_cx", "sigma_cy", "sigma_w", "sigma_h",
                "scale_sigma_fraction", "min_extent"},
               ws);
    read(s, "n", c.sampler.n, ws);
    read(s, "n_prime", c.sampler.n_prime, ws);
    read(s, "sigma_cx", c.sampler.sigma_cx, ws);
    read(s, "sigma_cy", c.sampler.sigma_cy, ws);
    read_optional(s, "sigma_w", c.sampler.sigma_w, ws);
    read_optional(s, "sigma_h", c.sampler.sigma_h, ws);
    read(s, "scale_sigma_fraction", c.sampler.scale_sigma_fraction, ws);
    read(s, "min_extent", c.sampler.min_extent, ws);
  }
  if (const YAML::Node o = root["oracle"]) {
    const std::string wo = "config.oracle";
    check_keys(o, {"kind", "flip_probability", "overlap_threshold", "k"}, wo);
    std::string kind = std::string(to_string(c.oracle.kind));
    read(o, "kind", kind, wo);
    c.oracle.kind = parse_oracle_kind(kind);
    read(o, "flip_probability", c.oracle.flip_probability, wo);
    read(o, "overlap_threshold", c.oracle.overlap_threshold, wo);
    read(o, "k", c.oracle.k, wo);
  }
  if (const YAML::Node i = root["init"]) {
    const std::string wi = "config.init";
    check_keys(i, {"positives", "jitter", "global_negatives"}, wi);
    read(i, "positives", c.init.positives, wi);
    read(i, "jitter", c.init.jitter, wi);
    read(i, "global_negatives", c.init.global_negatives, wi);
  }
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return c;
}

TrackerConfig load_tracker_config(const std::filesystem::path& path) {
  return parse_tracker_config(slurp(path));
}

std::string dump_tracker_config(const TrackerConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "k" << YAML::Value << c.k;
  out << YAML::Key << "m" << YAML::Value << c.m;
  out << YAML::Key << "tau_l";
  emit_double(out, c.tau_l) << YAML::Key << "tau_u";
  emit_double(out, c.tau_u);
  out << YAML::Key << "tau_p" << YAML::Value << c.tau_p;
  out << YAML::Key << "tau_a";
  emit_double(out, c.tau_a);
  out << YAML::Key << "delta" << YAML::Value << c.delta;
  out << YAML::Key << "alpha0" << YAML::Value << c.alpha0;
  out << YAML::Key << "budget_cap" << YAML::Value;
  if (c.budget_cap) {
    out << *c.budget_cap;
  } else {
    out << YAML::Null;
  }
  out << YAML::Key << "feature_dim" << YAML::Value << c.feature_dim;
  out << YAML::Key << "histogram_bins" << YAML::Value << c.histogram_bins;

  out << YAML::Key << "sampler" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << c.sampler.n;
  out << YAML::Key << "n_prime" << YAML::Value << c.sampler.n_prime;
  out << YAML::Key << "sigma_cx";
  emit_double(out, c.sampler.sigma_cx) << YAML::Key << "sigma_cy";
  emit_double(out, c.sampler.sigma_cy);
  for (auto [key, v] : {std::pair{"sigma_w", c.sampler.sigma_w}, {"sigma_h", c.sampler.sigma_h}}) {
    out << YAML::Key << key << YAML::Value;
    if (v) {
      out << fmt::format("{}", *v);
    } else {
      out << YAML::Null;
    }
  }
  out << YAML::Key << "scale_sigma_fraction";
  emit_double(out, c.sampler.scale_sigma_fraction) << YAML::Key << "min_extent";
  emit_double(out, c.sampler.min_extent);
  out << YAML::EndMap;

  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(c.oracle.kind));
  out << YAML::Key << "flip_probability";
  emit_double(out, c.oracle.flip_probability) << YAML::Key << "overlap_threshold";
  emit_double(out, c.oracle.overlap_threshold);
  out << YAML::Key << "k" << YAML::Value << c.oracle.k;
  out << YAML::EndMap;

  out << YAML::Key << "init" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "positives" << YAML::Value << c.init.positives;
  out << YAML::Key << "jitter";
  emit_double(out, c.init.jitter);
  out << YAML::Key << "global_negatives" << YAML::Value << c.init.global_negatives;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ScenarioSpec parse_scenario(const std::string& yaml_text) {
  const YAML::Node root = parse_text(yaml_text);
  const std::string w = "scenario";
  check_keys(root,
             {"name", "tags", "frame_count", "width", "height", "target", "distractors",
              "occlusions", "feature_dim", "signature_scale", "drift_rate", "noise_std",
              "background_variation", "seed"},
             w);
  ScenarioSpec s;
  read(root, "name", s.name, w);
  read(root, "tags", s.tags, w);
  read(root, "frame_count", s.frame_count, w);
  read(root, "width", s.width, w);
  read(root, "height", s.height, w);
  read(root, "feature_dim", s.feature_dim, w);
  read(root, "signature_scale", s.signature_scale, w);
  read(root, "drift_rate", s.drift_rate, w);
  read(root, "noise_std", s.noise_std, w);
  read(root, "background_variation", s.background_variation, w);
  read(root, "seed", s.seed, w);
  s.target = read_path(root["target"], "scenario.target");
  if (const YAML::Node ds = root["distractors"]) {
    if (!ds.IsSequence()) throw ConfigError("scenario.distractors: expected a list");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string wd = fmt::format("scenario.distractors[{}]", i);
      check_keys(ds[i], {"similarity", "path"}, wd);
      DistractorSpec d;
      read(ds[i], "similarity", d.similarity, wd);
      d.path = read_path(ds[i]["path"], wd + ".path");
      s.distractors.push_back(std::move(d));
    }
  }
  if (const YAML::Node os = root["occlusions"]) {
    if (!os.IsSequence()) throw ConfigError("scenario.occlusions: expected a list");
    for (std::size_t i = 0; i < os.size(); ++i) {
      const std::string wo = fmt::format("scenario.occlusions[{}]", i);
      check_keys(os[i], {"first", "last"}, wo);
      OcclusionSpec o;
      read(os[i], "first", o.first, wo);
      read(os[i], "last", o.last, wo);
      s.occlusions.push_back(o);
    }
  }
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(fmt::format("scenario: {}", e.what()));
  }
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) { return parse_scenario(slurp(path)); }

std::string dump_scenario(const ScenarioSpec& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "tags" << YAML::Value << YAML::Flow << s.tags;
  out << YAML::Key << "frame_count" << YAML::Value << s.frame_count;
  out << YAML::Key << "width";
  emit_double(out, s.width) << YAML::Key << "height";
  emit_double(out, s.height);
  out << YAML::Key << "feature_dim" << YAML::Value << s.feature_dim;
  out << YAML::Key << "signature_scale";
  emit_double(out, s.signature_scale) << YAML::Key << "drift_rate";
  emit_double(out, s.drift_rate) << YAML::Key << "noise_std";
  emit_double(out, s.noise_std) << YAML::Key << "background_variation";
  emit_double(out, s.background_variation);
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "target" << YAML::Value;
  emit_path(out, s.target);
  out << YAML::Key << "distractors" << YAML::Value << YAML::BeginSeq;
  for (const DistractorSpec& d : s.distractors) {
    out << YAML::BeginMap << YAML::Key << "similarity";
    emit_double(out, d.similarity) << YAML::Key << "path" << YAML::Value;
    emit_path(out, d.path);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "occlusions" << YAML::Value << YAML::BeginSeq;
  for (const OcclusionSpec& o : s.occlusions) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "first" << YAML::Value << o.first
        << YAML::Key << "last" << YAML::Value << o.last << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void write_ground_truth(std::ostream& out, std::span<const TargetState> boxes) {
  for (const TargetState& b : boxes) {
    const TargetState::Corner c = b.corner();
    fmt::print(out, "{},{},{},{}\n", c.x, c.y, c.w, c.h);
  }
}

std::vector<TargetState> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::vector<TargetState> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (char& ch : line) {
      if (ch == ',' || ch == '\t') ch = ' ';
    }
    std::istringstream ls(line);
    double x, y, w, h;
    if (!(ls >> x >> y >> w >> h)) {
      throw IoError(fmt::format("{}:{}: expected x,y,w,h", path.string(), lineno));
    }
    out.push_back(TargetState::from_corner(x, y, w, h));
  }
  return out;
}

void configure_logging_from_env() {
  const char* env = std::getenv("UST_LOG");
  const std::string v = env ? env : "";
  if (v == "off") {
    spdlog::set_level(spdlog::level::off);
  } else if (v == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (v == "trace") {
    spdlog::set_level(spdlog::level::trace);
  } else {
    spdlog::set_level(spdlog::level::warn);
    if (!v.empty()) spdlog::warn("UST_LOG='{}' not recognized; expected off, info or trace", v);
  }
}

}  // namespace ust
