#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adlex/corpus.hpp"
#include "json.hpp"

namespace adlex::divergence {

using WordSet = std::set<std::string>;
using Counts = std::map<std::string, long>;

// |P ∩ C| / |P ∪ C|. Throws BothEmpty.
double jaccard(const WordSet& p, const WordSet& c);

// Jelinek-Mercer smoothed unigram model of a document D inside a collection S:
// P(w | D, S) = (1 - alpha_d) d_w / |D| + alpha_d s_w / |S|.
class SmoothedUnigramModel {
 public:
  // Throws EmptyModel for an empty document or collection, DomainError when
  // alpha_d is outside [0, 1] or a document count exceeds the collection's.
  SmoothedUnigramModel(Counts doc_counts, Counts coll_counts, double alpha_d);

  static SmoothedUnigramModel from_tokens(std::span<const std::string> document,
                                          std::span<const std::string> collection, double alpha_d);

  const Counts& doc_counts() const { return doc_counts_; }
  const Counts& coll_counts() const { return coll_counts_; }
  long doc_total() const { return doc_total_; }
  long coll_total() const { return coll_total_; }
  double alpha_d() const { return alpha_d_; }

  WordSet vocabulary() const;

 private:
  Counts doc_counts_;
  Counts coll_counts_;
  long doc_total_ = 0;
  long coll_total_ = 0;
  double alpha_d_;
};

Counts count_tokens(std::span<const std::string> tokens);

// Words absent from the collection get probability 0.
double jm_probability(const SmoothedUnigramModel& model, const std::string& word);

// Sum over `vocabulary` of p log(p / q) with 0 log(0 / q) = 0. `log_base` of 0
// means natural log. Throws ZeroDenominator when q(w) = 0 < p(w).
double kl_divergence(const SmoothedUnigramModel& p_model, const SmoothedUnigramModel& q_model,
                     const WordSet& vocabulary, double log_base = 0.0);

// Same sum over explicit probability vectors.
double kl_divergence(std::span<const double> p, std::span<const double> q, double log_base = 0.0);

struct GroupDivergence {
  double jaccard = 0.0;
  double kl_cd = 0.0;  // KL(control || dementia)
  double kl_dc = 0.0;  // KL(dementia || control)
  std::size_t control_vocabulary = 0;
  std::size_t dementia_vocabulary = 0;
  std::size_t shared_vocabulary = 0;
  long control_tokens = 0;
  long dementia_tokens = 0;
};

// Word tokens only (punctuation and terminators are excluded).
GroupDivergence group_divergence(const Dataset& data, double alpha_d, double log_base = 0.0);

nlohmann::json to_json(const GroupDivergence& g, double alpha_d, double log_base);

}  // namespace adlex::divergence
