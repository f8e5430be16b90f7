#include "adlex/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "adlex/io.hpp"

namespace adlex::model {

namespace t = tensor;

const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::Stl: return "stl";
    case Architecture::Siamese: return "siamese";
    case Architecture::Mtl: return "mtl";
    case Architecture::MtlDe: return "mtl-de";
  }
  return "?";
}

Architecture parse_architecture(const std::string& s) {
  if (s == "stl") return Architecture::Stl;
  if (s == "siamese") return Architecture::Siamese;
  if (s == "mtl") return Architecture::Mtl;
  if (s == "mtl-de" || s == "mtl_de") return Architecture::MtlDe;
  throw Error(Errc::ConfigError, "unknown model '" + s + "' (stl, siamese, mtl, mtl-de)");
}

const char* to_string(EncoderKind k) { return k == EncoderKind::ToyTrainable ? "toy" : "precomputed"; }

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "toy") return EncoderKind::ToyTrainable;
  if (s == "precomputed") return EncoderKind::PrecomputedFile;
  throw Error(Errc::ConfigError, "unknown encoder '" + s + "' (toy, precomputed)");
}

const char* to_string(ContextKind k) { return k == ContextKind::MeanContext ? "mean" : "self-attn"; }

ContextKind parse_context_kind(const std::string& s) {
  if (s == "mean") return ContextKind::MeanContext;
  if (s == "self-attn" || s == "selfattn") return ContextKind::SelfAttnLayer;
  throw Error(Errc::ConfigError, "unknown context '" + s + "' (mean, self-attn)");
}

// ---- vocabulary ----

Vocabulary::Vocabulary() : tokens_{kUnkToken} { index_[kUnkToken] = kUnk; }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& tok : tokens) {
    if (index_.emplace(tok, tokens_.size()).second) tokens_.push_back(tok);
  }
}

Vocabulary Vocabulary::build(const Dataset& data) {
  std::set<std::string> seen;
  for (const auto& tr : data) seen.insert(tr.tokens().begin(), tr.tokens().end());
  seen.erase(kUnkToken);
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

// ---- precomputed embeddings ----

PrecomputedStore PrecomputedStore::load(const std::filesystem::path& manifest) {
  static_assert(std::endian::native == std::endian::little, "embedding files are little-endian");
  PrecomputedStore store;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(manifest));
    if (j.at("format").get<std::string>() != "adlex-embeddings" || j.at("version").get<int>() != 1) {
      throw Error(Errc::ParseError, manifest.string() + ": not an adlex-embeddings v1 manifest");
    }
    store.dim_ = j.at("dim").get<std::size_t>();
    const auto bytes = io::read_file(manifest.parent_path() / j.at("data").get<std::string>());
    for (const auto& e : j.at("entries")) {
      const auto id = e.at("id").get<std::string>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      const std::size_t n = store.dim_ * cols;
      if (cols == 0 || offset + n * sizeof(double) > bytes.size()) {
        throw Error(Errc::ParseError, manifest.string() + ": entry " + id + " out of bounds");
      }
      Matrix m(store.dim_, cols);
      std::memcpy(m.data.data(), bytes.data() + offset, n * sizeof(double));
      if (!store.matrices_.emplace(id, std::move(m)).second) {
        throw Error(Errc::DuplicateId, manifest.string() + ": duplicate entry " + id);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, manifest.string() + ": " + e.what());
  }
  if (store.dim_ < 2) throw Error(Errc::ConfigError, "embedding dim must be at least 2");
  return store;
}

void PrecomputedStore::write(const std::filesystem::path& manifest, const std::map<std::string, Matrix>& matrices) {
  std::string bytes;
  nlohmann::json entries = nlohmann::json::array();
  std::size_t dim = 0;
  for (const auto& [id, m] : matrices) {
    if (dim == 0) dim = m.rows;
    if (m.rows != dim) throw Error(Errc::ShapeMismatch, "embedding " + id + " has " + m.shape());
    entries.push_back({{"id", id}, {"offset", bytes.size()}, {"cols", m.cols}});
    bytes.append(reinterpret_cast<const char*>(m.data.data()), m.data.size() * sizeof(double));
  }
  const std::string data_name = manifest.stem().string() + ".bin";
  io::write_file_atomic(manifest.parent_path() / data_name, bytes);
  nlohmann::json j = {{"format", "adlex-embeddings"}, {"version", 1}, {"dim", dim}, {"data", data_name},
                      {"entries", std::move(entries)}};
  io::write_file_atomic(manifest, io::dump(j));
}

const Matrix& PrecomputedStore::get(const std::string& id) const {
  auto it = matrices_.find(id);
  if (it == matrices_.end()) throw Error(Errc::MissingEmbedding, "no precomputed embedding for " + id);
  return it->second;
}

// ---- configs ----

std::size_t ModelConfig::k() const { return attention_k ? attention_k : std::max<std::size_t>(1, encoder.embed_dim / 2); }

void ModelConfig::validate() const {
  if (encoder.embed_dim < 2) throw Error(Errc::ConfigError, "embed_dim must be at least 2");
  if (encoder.max_len < 2) throw Error(Errc::ConfigError, "max_len must be at least 2");
  if (hidden < 1) throw Error(Errc::ConfigError, "hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(Errc::ConfigError, "dropout must be in [0, 1)");
  if (encoder.kind == EncoderKind::PrecomputedFile && encoder.embeddings.empty()) {
    throw Error(Errc::ConfigError, "precomputed encoder needs an embeddings manifest");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"architecture", to_string(architecture)},
          {"encoder", to_string(encoder.kind)},
          {"embed_dim", encoder.embed_dim},
          {"context", to_string(encoder.context)},
          {"max_len", encoder.max_len},
          {"embeddings", encoder.embeddings},
          {"attention_k", k()},
          {"hidden", hidden},
          {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.architecture = parse_architecture(j.at("architecture").get<std::string>());
    c.encoder.kind = parse_encoder_kind(j.at("encoder").get<std::string>());
    c.encoder.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.encoder.context = parse_context_kind(j.at("context").get<std::string>());
    c.encoder.max_len = j.at("max_len").get<std::size_t>();
    c.encoder.embeddings = j.value("embeddings", "");
    c.attention_k = j.at("attention_k").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::ConfigError, "alpha must be in [0, 1]");
  for (double w : severity_weights) {
    if (!(w > 0.0)) throw Error(Errc::ConfigError, "severity weights must be positive");
  }
}

std::array<double, 4> balanced_severity_weights(const Dataset& train) {
  std::array<double, 4> counts{};
  double total = 0.0;
  for (const auto& tr : train) {
    if (auto s = tr.severity()) {
      counts[static_cast<int>(*s)] += 1.0;
      total += 1.0;
    }
  }
  std::array<double, 4> w{1.0, 1.0, 1.0, 1.0};
  for (int c = 0; c < 4; ++c) {
    if (counts[c] > 0.0) w[c] = total / (4.0 * counts[c]);
  }
  return w;
}

// ---- building blocks ----

CoAttentionOutput coattention(Var C, Var S, const CoAttentionVars& p) {
  const std::size_t d = C.rows();
  const std::size_t k = p.W_s.rows();
  if (S.rows() != d) throw Error(Errc::ShapeMismatch, "coattention: C " + C.value().shape() + " vs S " + S.value().shape());
  if (p.W_l.rows() != d || p.W_l.cols() != d) throw Error(Errc::ShapeMismatch, "W_l must be dxd, got " + p.W_l.value().shape());
  if (p.W_s.cols() != d || p.W_c.rows() != k || p.W_c.cols() != d) {
    throw Error(Errc::ShapeMismatch, "W_s/W_c must be kxd, got " + p.W_s.value().shape() + " and " + p.W_c.value().shape());
  }
  if (p.w_hs.rows() != k || p.w_hs.cols() != 1 || p.w_hc.rows() != k || p.w_hc.cols() != 1) {
    throw Error(Errc::ShapeMismatch, "w_hs/w_hc must be kx1, got " + p.w_hs.value().shape() + " and " + p.w_hc.value().shape());
  }
  CoAttentionOutput out;
  out.F = t::tanh(t::matmul(t::matmul(t::transpose(C), p.W_l), S));  // N x T
  Var WsS = t::matmul(p.W_s, S);                                       // k x T
  Var WcC = t::matmul(p.W_c, C);                                       // k x N
  Var Hs = t::tanh(t::add(WsS, t::matmul(WcC, out.F)));                // k x T
  Var Hc = t::tanh(t::add(WcC, t::matmul(WsS, t::transpose(out.F))));  // k x N
  out.a_s = t::row_softmax(t::matmul(t::transpose(p.w_hs), Hs));       // 1 x T
  out.a_c = t::row_softmax(t::matmul(t::transpose(p.w_hc), Hc));       // 1 x N
  Var s_hat = t::matmul(out.a_s, t::transpose(S));                     // 1 x d
  Var c_hat = t::matmul(out.a_c, t::transpose(C));                     // 1 x d
  out.p = t::concat_cols(s_hat, c_hat);
  return out;
}

Var joint_loss(Var dem_probs, Var sev_probs, int label, std::optional<int> severity, const LossConfig& cfg) {
  if (label != 0 && label != 1) throw Error(Errc::DomainError, "label must be 0 or 1");
  Var dem = t::scale(t::nll(dem_probs, static_cast<std::size_t>(label)), 1.0 - cfg.alpha);
  if (!severity) return dem;
  if (*severity < 0 || *severity > 3) throw Error(Errc::InvalidSeverity, "severity " + std::to_string(*severity));
  const double w = cfg.severity_weights[static_cast<std::size_t>(*severity)];
  return t::add(dem, t::scale(t::nll(sev_probs, static_cast<std::size_t>(*severity)), cfg.alpha * w));
}

// ---- classifier ----

Classifier::Classifier(ModelConfig cfg, Vocabulary vocab, std::uint64_t seed,
                       std::shared_ptr<const PrecomputedStore> store)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), store_(std::move(store)) {
  cfg_.validate();
  const std::size_t d = cfg_.encoder.embed_dim;
  const std::size_t k = cfg_.k();
  const std::size_t h = cfg_.hidden;
  Rng init = Rng(seed).derive("init");
  auto glorot = [&](const std::string& name, std::size_t r, std::size_t c) {
    Rng g = init.derive(name);
    return t::glorot_uniform(r, c, g);
  };

  if (cfg_.encoder.kind == EncoderKind::ToyTrainable) {
    add("encoder.embedding", glorot("encoder.embedding", d, vocab_.size()), true);
    if (cfg_.encoder.context == ContextKind::SelfAttnLayer) {
      add("encoder.Q", glorot("encoder.Q", d, d), true);
      add("encoder.V", glorot("encoder.V", d, d), true);
    }
  } else {
    if (!store_) throw Error(Errc::ConfigError, "precomputed encoder needs a loaded embedding store");
    if (store_->dim() != d) {
      throw Error(Errc::ConfigError, "embedding store has dim " + std::to_string(store_->dim()) + ", config says " +
                                         std::to_string(d));
    }
  }

  switch (cfg_.architecture) {
    case Architecture::Stl:
    case Architecture::Siamese: {
      const std::size_t in = cfg_.architecture == Architecture::Siamese ? 2 * d : d;
      if (cfg_.architecture == Architecture::Siamese) {
        add("coattn.W_l", glorot("coattn.W_l", d, d), false);
        add("coattn.W_s", glorot("coattn.W_s", k, d), false);
        add("coattn.W_c", glorot("coattn.W_c", k, d), false);
        add("coattn.w_hs", glorot("coattn.w_hs", k, 1), false);
        add("coattn.w_hc", glorot("coattn.w_hc", k, 1), false);
      }
      add("head.dense.W", glorot("head.dense.W", in, h), false);
      add("head.dense.b", Matrix(1, h), false);
      add("head.out.W", glorot("head.out.W", h, 1), false);
      add("head.out.b", Matrix(1, 1), false);
      break;
    }
    case Architecture::MtlDe:
      for (const char* task : {"dem", "sev"}) {
        const std::string p = std::string("de.") + task;
        add(p + ".M", Matrix::identity(d), false);
        add(p + ".Q", glorot(p + ".Q", d, d), false);
        add(p + ".V", glorot(p + ".V", d, d), false);
      }
      [[fallthrough]];
    case Architecture::Mtl:
      add("mtl.dem.W", glorot("mtl.dem.W", d, 2), false);
      add("mtl.dem.b", Matrix(1, 2), false);
      add("mtl.sev.W", glorot("mtl.sev.W", d, 4), false);
      add("mtl.sev.b", Matrix(1, 4), false);
      break;
  }
}

Parameter& Classifier::add(const std::string& name, Matrix init, bool encoder) {
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  is_encoder_.push_back(encoder);
  by_name_[name] = params_.back().get();
  return *params_.back();
}

Parameter& Classifier::parameter(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error(Errc::DomainError, "no parameter named " + name);
  return *it->second;
}

Var Classifier::bind(Tape& tape, const std::string& name) const { return tape.param(parameter(name)); }

std::vector<Parameter*> Classifier::parameters() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> Classifier::encoder_parameters() const {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (is_encoder_[i]) out.push_back(params_[i].get());
  }
  return out;
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void Classifier::set_encoder_trainable(bool trainable) {
  for (auto* p : encoder_parameters()) p->trainable = trainable;
}

Input Classifier::make_input(const Transcript& tr) const {
  if (cfg_.encoder.kind == EncoderKind::PrecomputedFile) {
    Input in;
    in.precomputed = &store_->get(tr.id());
    return in;
  }
  return make_input(std::span<const std::string>(tr.tokens()));
}

Input Classifier::make_input(std::span<const std::string> tokens) const {
  if (cfg_.encoder.kind == EncoderKind::PrecomputedFile) {
    throw Error(Errc::ConfigError, "precomputed encoder cannot embed raw tokens");
  }
  Input in;
  const std::size_t n = std::min(tokens.size(), cfg_.encoder.max_len);
  in.ids.reserve(std::max<std::size_t>(n, 2));
  for (std::size_t i = 0; i < n; ++i) in.ids.push_back(vocab_.id(tokens[i]));
  // Empty or one-token inputs are padded with UNK so both siamese halves exist.
  while (in.ids.size() < 2) in.ids.push_back(Vocabulary::kUnk);
  return in;
}

Var Classifier::contextualize(Tape& tape, Var X) const {
  const std::size_t n = X.cols();
  if (cfg_.encoder.context == ContextKind::MeanContext) {
    // Each position mixed half and half with the sequence mean.
    return t::scale(t::add(X, t::repeat_cols(t::mean_over_columns(X), n)), 0.5);
  }
  // One residual self-attention layer: X + V X A^T with A = softmax(X^T Q X / sqrt(d)).
  Var Q = bind(tape, "encoder.Q");
  Var V = bind(tape, "encoder.V");
  const double inv = 1.0 / std::sqrt(static_cast<double>(cfg_.encoder.embed_dim));
  Var A = t::row_softmax(t::scale(t::matmul(t::matmul(t::transpose(X), Q), X), inv));
  return t::add(X, t::matmul(t::matmul(V, X), t::transpose(A)));
}

Var Classifier::encode_ids(Tape& tape, std::span<const std::size_t> ids) const {
  return contextualize(tape, t::embedding(bind(tape, "encoder.embedding"), ids));
}

Var Classifier::encode(Tape& tape, const Input& in) const {
  if (cfg_.encoder.kind == EncoderKind::PrecomputedFile) {
    if (!in.precomputed) throw Error(Errc::MissingEmbedding, "input carries no precomputed matrix");
    const Matrix& M = *in.precomputed;
    if (M.cols <= cfg_.encoder.max_len) return tape.constant(M);
    Matrix cut(M.rows, cfg_.encoder.max_len);
    for (std::size_t i = 0; i < M.rows; ++i)
      for (std::size_t j = 0; j < cut.cols; ++j) cut(i, j) = M(i, j);
    return tape.constant(std::move(cut));
  }
  return encode_ids(tape, in.ids);
}

Var Classifier::task_block(Tape& tape, Var C, const std::string& prefix) const {
  Var M = bind(tape, prefix + ".M");
  Var Q = bind(tape, prefix + ".Q");
  Var V = bind(tape, prefix + ".V");
  const double inv = 1.0 / std::sqrt(static_cast<double>(cfg_.encoder.embed_dim));
  Var A = t::row_softmax(t::scale(t::matmul(t::matmul(t::transpose(C), Q), C), inv));
  return t::add(t::matmul(M, C), t::matmul(t::matmul(V, C), t::transpose(A)));
}

Var Classifier::dense_head(Tape& tape, Var x, bool training, Rng* rng, double rate) const {
  if (training && rate > 0.0) {
    if (!rng) throw Error(Errc::DomainError, "training with dropout needs an rng");
    x = t::dropout(x, rate, true, *rng);
  }
  Var h = t::relu(t::add(t::matmul(x, bind(tape, "head.dense.W")), bind(tape, "head.dense.b")));
  return t::sigmoid(t::add(t::matmul(h, bind(tape, "head.out.W")), bind(tape, "head.out.b")));
}

Var Classifier::softmax_head(Tape& tape, Var g, const std::string& prefix) const {
  return t::row_softmax(t::add(t::matmul(g, bind(tape, prefix + ".W")), bind(tape, prefix + ".b")));
}

Output Classifier::forward(Tape& tape, const Input& in, bool training, Rng* rng) const {
  Output out;
  switch (cfg_.architecture) {
    case Architecture::Stl: {
      Var g = t::transpose(t::mean_over_columns(encode(tape, in)));
      out.dementia = dense_head(tape, g, training, rng, 0.0);
      break;
    }
    case Architecture::Siamese: {
      Var C, S;
      if (cfg_.encoder.kind == EncoderKind::PrecomputedFile) {
        Var full = encode(tape, in);
        const Matrix& M = full.value();
        if (M.cols < 2) throw Error(Errc::TooShort, "siamese input needs at least 2 columns");
        const std::size_t half = (M.cols + 1) / 2;
        Matrix a(M.rows, half), b(M.rows, M.cols - half);
        for (std::size_t i = 0; i < M.rows; ++i) {
          for (std::size_t j = 0; j < M.cols; ++j) (j < half ? a(i, j) : b(i, j - half)) = M(i, j);
        }
        C = tape.constant(std::move(a));
        S = tape.constant(std::move(b));
      } else {
        auto [s1, s2] = split_transcript(std::span<const std::size_t>(in.ids));
        C = encode_ids(tape, s1);
        S = encode_ids(tape, s2);
      }
      CoAttentionVars cv{bind(tape, "coattn.W_l"), bind(tape, "coattn.W_s"), bind(tape, "coattn.W_c"),
                         bind(tape, "coattn.w_hs"), bind(tape, "coattn.w_hc")};
      out.dementia = dense_head(tape, coattention(C, S, cv).p, training, rng, cfg_.dropout);
      break;
    }
    case Architecture::Mtl: {
      Var g = t::transpose(t::mean_over_columns(encode(tape, in)));
      out.dementia = softmax_head(tape, g, "mtl.dem");
      out.severity = softmax_head(tape, g, "mtl.sev");
      out.multitask = true;
      break;
    }
    case Architecture::MtlDe: {
      Var C = encode(tape, in);
      Var gd = t::transpose(t::mean_over_columns(task_block(tape, C, "de.dem")));
      Var gs = t::transpose(t::mean_over_columns(task_block(tape, C, "de.sev")));
      out.dementia = softmax_head(tape, gd, "mtl.dem");
      out.severity = softmax_head(tape, gs, "mtl.sev");
      out.multitask = true;
      break;
    }
  }
  return out;
}

Var Classifier::loss(Tape& tape, const Input& in, int label, std::optional<int> severity, bool training, Rng* rng,
                     const LossConfig& lc) const {
  Output out = forward(tape, in, training, rng);
  if (out.multitask) return joint_loss(out.dementia, out.severity, label, severity, lc);
  return t::bce(out.dementia, static_cast<double>(label));
}

double Classifier::predict(const Input& in) const {
  Tape tape;
  Output out = forward(tape, in, false, nullptr);
  const Matrix& v = out.dementia.value();
  return out.multitask ? v(0, 1) : v(0, 0);
}

nlohmann::json Classifier::to_json() const {
  std::vector<const Parameter*> ps(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) ps[i] = params_[i].get();
  nlohmann::json vocab = std::vector<std::string>(vocab_.tokens().begin() + 1, vocab_.tokens().end());
  return {{"format", "adlex-model"},
          {"version", 1},
          {"config", cfg_.to_json()},
          {"vocab", std::move(vocab)},
          {"params", t::params_to_json(ps)}};
}

Classifier Classifier::from_json(const nlohmann::json& j, std::shared_ptr<const PrecomputedStore> store) {
  try {
    if (j.at("format").get<std::string>() != "adlex-model" || j.at("version").get<int>() != 1) {
      throw Error(Errc::ParseError, "not an adlex-model v1 document");
    }
    auto cfg = ModelConfig::from_json(j.at("config"));
    if (cfg.encoder.kind == EncoderKind::PrecomputedFile && !store) {
      store = std::make_shared<PrecomputedStore>(PrecomputedStore::load(cfg.encoder.embeddings));
    }
    Classifier m(cfg, Vocabulary(j.at("vocab").get<std::vector<std::string>>()), 0, std::move(store));
    t::params_from_json(j.at("params"), m.parameters());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("model checkpoint: ") + e.what());
  }
}

}  // namespace adlex::model
