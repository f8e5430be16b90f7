#include "adlex/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "adlex/error.hpp"
#include "adlex/io.hpp"

namespace adlex {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(Errc::ConfigError, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected a number");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected an integer");
  return out;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "expected true or false");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ADLEX_DOUBLE(NAME, FIELD)                                                       \
  Key {                                                                                 \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_double(NAME, v); },     \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                 \
  }
#define ADLEX_INT(NAME, FIELD)                                                          \
  Key {                                                                                 \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_int(NAME, v); },        \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                      \
  }
#define ADLEX_SIZE(NAME, FIELD)                                                                          \
  Key {                                                                                                  \
    NAME,                                                                                                \
        [](RunConfig& c, const std::string& v) {                                                         \
          const long x = to_long(NAME, v);                                                               \
          if (x < 0) bad(NAME, v, "must be non-negative");                                               \
          c.FIELD = static_cast<std::size_t>(x);                                                         \
        },                                                                                               \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                                       \
  }

const std::vector<Key>& table() {
  static const std::vector<Key> keys = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
       [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      {"t_test",
       [](RunConfig& c, const std::string& v) {
         if (v == "student") c.t_test = stats::TTestVariant::Student;
         else if (v == "welch") c.t_test = stats::TTestVariant::Welch;
         else bad("t_test", v, "expected student or welch");
       },
       [](const RunConfig& c) { return std::string(c.t_test == stats::TTestVariant::Student ? "student" : "welch"); }},
      ADLEX_DOUBLE("significance", significance),
      ADLEX_DOUBLE("alpha_d", alpha_d),
      {"log_base",
       [](RunConfig& c, const std::string& v) { c.log_base = v == "e" ? 0.0 : to_double("log_base", v); },
       [](const RunConfig& c) { return c.log_base > 0.0 ? fmt(c.log_base) : std::string("e"); }},
      ADLEX_INT("min_doc_freq", min_doc_freq),
      ADLEX_DOUBLE("marker_alpha", marker_alpha),
      {"tagger",
       [](RunConfig& c, const std::string& v) {
         try {
           c.tagger = markers::parse_backend(v);
         } catch (const Error& e) {
           bad("tagger", v, "expected lexicon or external");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.tagger == markers::TaggerBackend::Lexicon ? "lexicon" : "external");
       }},
      {"tags_file", [](RunConfig& c, const std::string& v) { c.tags_file = v; },
       [](const RunConfig& c) { return c.tags_file; }},
      {"model", [](RunConfig& c, const std::string& v) { c.model.architecture = model::parse_architecture(v); },
       [](const RunConfig& c) { return std::string(model::to_string(c.model.architecture)); }},
      {"encoder", [](RunConfig& c, const std::string& v) { c.model.encoder.kind = model::parse_encoder_kind(v); },
       [](const RunConfig& c) { return std::string(model::to_string(c.model.encoder.kind)); }},
      {"embeddings", [](RunConfig& c, const std::string& v) { c.model.encoder.embeddings = v; },
       [](const RunConfig& c) { return c.model.encoder.embeddings; }},
      {"context", [](RunConfig& c, const std::string& v) { c.model.encoder.context = model::parse_context_kind(v); },
       [](const RunConfig& c) { return std::string(model::to_string(c.model.encoder.context)); }},
      ADLEX_SIZE("d", model.encoder.embed_dim),
      ADLEX_SIZE("k", model.attention_k),
      ADLEX_SIZE("max_len", model.encoder.max_len),
      ADLEX_SIZE("hidden", model.hidden),
      ADLEX_DOUBLE("dropout", model.dropout),
      ADLEX_DOUBLE("alpha", loss.alpha),
      {"balanced_severity", [](RunConfig& c, const std::string& v) { c.balanced_severity = to_bool("balanced_severity", v); },
       [](const RunConfig& c) { return std::string(c.balanced_severity ? "true" : "false"); }},
      ADLEX_DOUBLE("phase1_lr", schedule.phase1_lr),
      ADLEX_DOUBLE("coattn_phase1_lr", schedule.coattn_phase1_lr),
      ADLEX_DOUBLE("phase2_lr", schedule.phase2_lr),
      ADLEX_DOUBLE("mtl_lr", schedule.mtl_lr),
      ADLEX_INT("es_patience_phase1", schedule.es_patience_phase1),
      ADLEX_INT("es_patience_phase2", schedule.es_patience_phase2),
      ADLEX_INT("es_patience_mtl", schedule.es_patience_mtl),
      ADLEX_DOUBLE("rlrop_factor", schedule.rlrop_factor),
      ADLEX_INT("rlrop_patience", schedule.rlrop_patience),
      ADLEX_INT("max_epochs", schedule.max_epochs),
      ADLEX_INT("batch_size", schedule.batch_size),
      ADLEX_DOUBLE("min_delta", schedule.min_delta),
      ADLEX_INT("cv_folds", cv_folds),
      ADLEX_INT("cv_repeats", cv_repeats),
      ADLEX_DOUBLE("val_frac", val_frac),
      ADLEX_INT("lime_samples", lime.n_samples),
      ADLEX_DOUBLE("lime_kernel_width", lime.kernel_width),
      ADLEX_DOUBLE("lime_ridge", lime.ridge),
      ADLEX_SIZE("lime_features", lime.n_features_keep),
      ADLEX_SIZE("lime_chunk", lime.chunk),
  };
  return keys;
}

#undef ADLEX_DOUBLE
#undef ADLEX_INT
#undef ADLEX_SIZE

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : table()) {
    if (k.name == key) {
      try {
        k.set(*this, value);
      } catch (const Error& e) {
        if (e.code() == Errc::ConfigError && std::string(e.what()).find(key + " = ") != std::string::npos) throw;
        bad(key, value, e.what());
      }
      return;
    }
  }
  throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  auto in01 = [](const char* key, double v, bool open_hi) {
    if (!(v > 0.0) || (open_hi ? !(v < 1.0) : !(v <= 1.0))) {
      throw Error(Errc::ConfigError, std::string(key) + " out of range: " + fmt(v));
    }
  };
  in01("significance", significance, false);
  in01("marker_alpha", marker_alpha, false);
  if (!(alpha_d >= 0.0 && alpha_d <= 1.0)) throw Error(Errc::ConfigError, "alpha_d must be in [0, 1]");
  if (log_base != 0.0 && !(log_base > 0.0 && log_base != 1.0)) {
    throw Error(Errc::ConfigError, "log_base must be positive and not 1");
  }
  if (min_doc_freq < 1) throw Error(Errc::ConfigError, "min_doc_freq must be at least 1");
  if (tagger == markers::TaggerBackend::External && tags_file.empty()) {
    throw Error(Errc::ConfigError, "tagger = external needs tags_file");
  }
  model.validate();
  loss.validate();
  schedule.validate();
  if (cv_folds < 2) throw Error(Errc::ConfigError, "cv_folds must be at least 2");
  if (cv_repeats < 1) throw Error(Errc::ConfigError, "cv_repeats must be at least 1");
  in01("val_frac", val_frac, true);
  if (lime.n_samples < 2) throw Error(Errc::ConfigError, "lime_samples must be at least 2");
  if (!(lime.kernel_width > 0.0)) throw Error(Errc::ConfigError, "lime_kernel_width must be positive");
  if (!(lime.ridge >= 0.0)) throw Error(Errc::ConfigError, "lime_ridge must be non-negative");
  if (lime.n_features_keep < 1) throw Error(Errc::ConfigError, "lime_features must be at least 1");
  if (lime.chunk < 1) throw Error(Errc::ConfigError, "lime_chunk must be at least 1");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw Error(Errc::ConfigError, "line " + std::to_string(lineno) + ": duplicate key " + key);
    if (value.empty() && key != "tags_file" && key != "embeddings") {
      throw Error(Errc::ConfigError, "line " + std::to_string(lineno) + ": empty value for " + key);
    }
    c.set(key, value);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : table()) {
    const std::string v = k.get(*this);
    if (v.empty()) continue;
    out += k.name + " = " + v + "\n";
  }
  return out;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : table()) j[k.name] = k.get(*this);
  return j;
}

trainer::RunOptions RunConfig::run_options() const {
  trainer::RunOptions o;
  o.model = model;
  o.schedule = schedule;
  o.loss = loss;
  o.balanced_severity = balanced_severity;
  return o;
}

}  // namespace adlex
