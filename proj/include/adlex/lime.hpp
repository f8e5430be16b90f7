#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace adlex::lime {

using Mask = std::vector<std::uint8_t>;

// Unique tokens in order of first occurrence.
std::vector<std::string> unique_features(std::span<const std::string> tokens);

struct Perturbation {
  std::vector<std::string> features;
  std::vector<Mask> masks;                       // n x m, row 0 all ones
  std::vector<std::vector<std::string>> texts;  // tokens with masked features removed everywhere
};

// Row i >= 1 removes a uniform number in [1, m] of distinct features, drawn
// from a stream derived from (seed, i) alone.
Perturbation perturb(std::span<const std::string> tokens, int n_samples, std::uint64_t seed);

// Cosine distance to the all-ones mask; an all-zero mask is at distance 1.
double cosine_distance(const Mask& mask);
double kernel_weight(const Mask& mask, double kernel_width = 25.0);

struct Surrogate {
  double intercept = 0.0;
  std::vector<std::size_t> features;  // kept columns
  std::vector<double> weights;        // one per kept column
};

// Weighted ridge with an unpenalized intercept. The design is centered by
// the weighted means and the normal equations are solved by Cholesky. With
// more than n_keep columns, the n_keep largest |coef| of a full fit are kept
// and refit. Throws SingularSystem, DomainError for bad shapes.
Surrogate fit_surrogate(const std::vector<Mask>& masks, std::span<const double> targets,
                        std::span<const double> sample_weights, std::size_t n_keep, double ridge = 1.0);

struct Options {
  int n_samples = 5000;
  double kernel_width = 25.0;
  double ridge = 1.0;
  std::size_t n_features_keep = 10;
  std::size_t chunk = 256;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct TokenWeight {
  std::string token;
  double weight = 0.0;
};

struct Explanation {
  std::string id;
  double prob = 0.0;  // model P(dementia) on the original transcript
  double intercept = 0.0;
  double local_prediction = 0.0;  // surrogate on the all-ones row
  std::vector<TokenWeight> tokens;  // by |weight| descending, then token
  std::uint64_t seed = 0;
  int n_samples = 0;
  double kernel_width = 25.0;
  std::size_t n_features = 0;

  nlohmann::json to_json() const;
};

// Batch of token lists -> P(dementia) for each.
using BatchPredict = std::function<std::vector<double>(const std::vector<std::vector<std::string>>&)>;

// Positive weights push toward dementia, negative toward control.
Explanation explain(const BatchPredict& predict, const std::string& id, std::span<const std::string> tokens,
                    const Options& opts);

// Static page with each token shaded by its signed weight (orange for
// dementia, blue for control).
std::string to_html(const Explanation& e, std::span<const std::string> tokens);

}  // namespace adlex::lime
