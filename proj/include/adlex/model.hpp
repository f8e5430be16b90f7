#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adlex/corpus.hpp"
#include "adlex/error.hpp"
#include "adlex/tensor.hpp"
#include "json.hpp"

namespace adlex::model {

using tensor::Matrix;
using tensor::Parameter;
using tensor::Tape;
using tensor::Var;

enum class Architecture { Stl, Siamese, Mtl, MtlDe };
enum class EncoderKind { ToyTrainable, PrecomputedFile };
enum class ContextKind { MeanContext, SelfAttnLayer };

const char* to_string(Architecture a);
Architecture parse_architecture(const std::string& s);
const char* to_string(EncoderKind k);
EncoderKind parse_encoder_kind(const std::string& s);
const char* to_string(ContextKind k);
ContextKind parse_context_kind(const std::string& s);

// Token -> row id. Id 0 is the reserved UNK row, also used for padding.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  static Vocabulary build(const Dataset& data);
  explicit Vocabulary(const std::vector<std::string>& tokens);  // without UNK

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

// Per-transcript d x N float64 matrices. Manifest:
// {"format": "adlex-embeddings", "version": 1, "dim": d, "data": "<file>",
//  "entries": [{"id", "offset", "cols"}]}
// The data file holds each matrix row-major as little-endian IEEE-754
// doubles starting at its byte offset.
class PrecomputedStore {
 public:
  static PrecomputedStore load(const std::filesystem::path& manifest);
  static void write(const std::filesystem::path& manifest, const std::map<std::string, Matrix>& matrices);

  std::size_t dim() const { return dim_; }
  // Throws MissingEmbedding.
  const Matrix& get(const std::string& id) const;
  bool contains(const std::string& id) const { return matrices_.count(id) > 0; }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Matrix> matrices_;
};

struct EncoderConfig {
  EncoderKind kind = EncoderKind::ToyTrainable;
  std::size_t embed_dim = 16;
  ContextKind context = ContextKind::MeanContext;
  std::size_t max_len = 512;
  std::string embeddings;  // manifest path for PrecomputedFile
};

struct ModelConfig {
  Architecture architecture = Architecture::Stl;
  EncoderConfig encoder;
  std::size_t attention_k = 0;  // 0 means embed_dim / 2
  std::size_t hidden = 128;
  double dropout = 0.4;

  std::size_t k() const;
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct LossConfig {
  double alpha = 0.1;
  std::array<double, 4> severity_weights{1.0, 1.0, 1.0, 1.0};
  void validate() const;
};

// n_total / (4 n_c) over transcripts with an MMSE; 1.0 for absent classes.
std::array<double, 4> balanced_severity_weights(const Dataset& train);

// First ceil(n/2) tokens and the rest. Throws TooShort below 2 tokens.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_transcript(std::span<const T> tokens) {
  if (tokens.size() < 2) throw Error(Errc::TooShort, "splitting needs at least 2 tokens");
  const std::size_t half = (tokens.size() + 1) / 2;
  return {std::vector<T>(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(half)),
          std::vector<T>(tokens.begin() + static_cast<std::ptrdiff_t>(half), tokens.end())};
}

struct CoAttentionVars {
  Var W_l, W_s, W_c, w_hs, w_hc;
};

struct CoAttentionOutput {
  Var p;    // 1 x 2d, [s_hat, c_hat]
  Var a_s;  // 1 x T
  Var a_c;  // 1 x N
  Var F;    // N x T affinity
};

// C: d x N, S: d x T.
CoAttentionOutput coattention(Var C, Var S, const CoAttentionVars& params);

// (1 - alpha) CE(dem) + alpha w_sev CE(sev); the second term vanishes when
// the severity is missing. Throws InvalidSeverity outside 0..3.
Var joint_loss(Var dem_probs, Var sev_probs, int label, std::optional<int> severity, const LossConfig& cfg);

struct Input {
  std::vector<std::size_t> ids;        // toy encoder
  const Matrix* precomputed = nullptr;  // precomputed encoder
};

struct Output {
  Var dementia;  // 1x1 probability (STL, siamese) or 1x2 probabilities (MTL)
  Var severity;  // 1x4 probabilities, MTL only
  bool multitask = false;
};

class Classifier {
 public:
  Classifier(ModelConfig cfg, Vocabulary vocab, std::uint64_t seed,
             std::shared_ptr<const PrecomputedStore> store = nullptr);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  Input make_input(const Transcript& t) const;
  Input make_input(std::span<const std::string> tokens) const;

  Var encode(Tape& tape, const Input& in) const;
  Output forward(Tape& tape, const Input& in, bool training, Rng* dropout_rng) const;
  Var loss(Tape& tape, const Input& in, int label, std::optional<int> severity, bool training,
           Rng* dropout_rng, const LossConfig& lc) const;

  // Eval-mode P(dementia).
  double predict(const Input& in) const;
  double predict(const Transcript& t) const { return predict(make_input(t)); }
  double predict_tokens(std::span<const std::string> tokens) const { return predict(make_input(tokens)); }

  std::vector<Parameter*> parameters() const;
  std::vector<Parameter*> encoder_parameters() const;
  Parameter& parameter(const std::string& name) const;
  std::size_t parameter_count() const;
  void set_encoder_trainable(bool trainable);

  // {"format": "adlex-model", "version": 1, "config", "vocab", "params"}
  nlohmann::json to_json() const;
  static Classifier from_json(const nlohmann::json& j, std::shared_ptr<const PrecomputedStore> store = nullptr);

 private:
  Parameter& add(const std::string& name, Matrix init, bool encoder);
  Var bind(Tape& tape, const std::string& name) const;
  Var encode_ids(Tape& tape, std::span<const std::size_t> ids) const;
  Var contextualize(Tape& tape, Var X) const;
  Var task_block(Tape& tape, Var C, const std::string& prefix) const;
  Var dense_head(Tape& tape, Var x, bool training, Rng* rng, double dropout) const;
  Var softmax_head(Tape& tape, Var g, const std::string& prefix) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  std::shared_ptr<const PrecomputedStore> store_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<bool> is_encoder_;
  std::map<std::string, Parameter*> by_name_;
};

}  // namespace adlex::model
