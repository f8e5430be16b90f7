#include "adlex/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "adlex/error.hpp"
#include "adlex/textstats.hpp"

namespace adlex::divergence {

double jaccard(const WordSet& p, const WordSet& c) {
  if (p.empty() && c.empty()) throw Error(Errc::BothEmpty, "jaccard of two empty sets");
  std::size_t inter = 0;
  for (const auto& w : p) inter += c.count(w);
  const std::size_t uni = p.size() + c.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Counts count_tokens(std::span<const std::string> tokens) {
  Counts c;
  for (const auto& t : tokens) ++c[t];
  return c;
}

SmoothedUnigramModel::SmoothedUnigramModel(Counts doc_counts, Counts coll_counts, double alpha_d)
    : doc_counts_(std::move(doc_counts)), coll_counts_(std::move(coll_counts)), alpha_d_(alpha_d) {
  if (!(alpha_d_ >= 0.0 && alpha_d_ <= 1.0)) throw Error(Errc::DomainError, "alpha_d must be in [0, 1]");
  for (const auto& [w, n] : coll_counts_) {
    if (n < 0) throw Error(Errc::DomainError, "negative count for " + w);
    coll_total_ += n;
  }
  if (coll_total_ == 0) throw Error(Errc::EmptyModel, "collection has no tokens");
  for (const auto& [w, n] : doc_counts_) {
    if (n < 0) throw Error(Errc::DomainError, "negative count for " + w);
    auto it = coll_counts_.find(w);
    if (it == coll_counts_.end() || it->second < n) {
      throw Error(Errc::DomainError, "document count exceeds collection count for '" + w + "'");
    }
    doc_total_ += n;
  }
  if (doc_total_ == 0) throw Error(Errc::EmptyModel, "document has no tokens");
}

SmoothedUnigramModel SmoothedUnigramModel::from_tokens(std::span<const std::string> document,
                                                       std::span<const std::string> collection,
                                                       double alpha_d) {
  return SmoothedUnigramModel(count_tokens(document), count_tokens(collection), alpha_d);
}

WordSet SmoothedUnigramModel::vocabulary() const {
  WordSet v;
  for (const auto& [w, n] : coll_counts_) {
    if (n > 0) v.insert(w);
  }
  return v;
}

double jm_probability(const SmoothedUnigramModel& model, const std::string& word) {
  auto find = [&](const Counts& c) -> double {
    auto it = c.find(word);
    return it == c.end() ? 0.0 : static_cast<double>(it->second);
  };
  const double d = find(model.doc_counts()) / static_cast<double>(model.doc_total());
  const double s = find(model.coll_counts()) / static_cast<double>(model.coll_total());
  return (1.0 - model.alpha_d()) * d + model.alpha_d() * s;
}

namespace {

double log_in_base(double x, double base) { return base > 0.0 ? std::log(x) / std::log(base) : std::log(x); }

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q, double log_base) {
  if (p.size() != q.size()) throw Error(Errc::DomainError, "kl_divergence: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw Error(Errc::ZeroDenominator, "q is zero where p is positive");
    sum += p[i] * log_in_base(p[i] / q[i], log_base);
  }
  return std::max(0.0, sum);
}

double kl_divergence(const SmoothedUnigramModel& p_model, const SmoothedUnigramModel& q_model,
                     const WordSet& vocabulary, double log_base) {
  std::vector<double> p, q;
  p.reserve(vocabulary.size());
  q.reserve(vocabulary.size());
  for (const auto& w : vocabulary) {
    p.push_back(jm_probability(p_model, w));
    q.push_back(jm_probability(q_model, w));
  }
  try {
    return kl_divergence(p, q, log_base);
  } catch (const Error& e) {
    if (e.code() != Errc::ZeroDenominator) throw;
    for (const auto& w : vocabulary) {
      if (jm_probability(p_model, w) > 0.0 && jm_probability(q_model, w) == 0.0) {
        throw Error(Errc::ZeroDenominator, "q('" + w + "') = 0 while p > 0");
      }
    }
    throw;
  }
}

GroupDivergence group_divergence(const Dataset& data, double alpha_d, double log_base) {
  std::vector<std::string> control, dementia;
  for (const auto& t : data) {
    auto& dst = t.label() == Label::Control ? control : dementia;
    for (const auto& tok : t.tokens()) {
      if (textstats::is_word(tok)) dst.push_back(tok);
    }
  }
  if (control.empty() || dementia.empty()) {
    throw Error(Errc::EmptyModel, "both groups need at least one word token");
  }
  std::vector<std::string> collection = control;
  collection.insert(collection.end(), dementia.begin(), dementia.end());

  const WordSet p(control.begin(), control.end());
  const WordSet c(dementia.begin(), dementia.end());
  const auto coll_counts = count_tokens(collection);
  SmoothedUnigramModel m_control(count_tokens(control), coll_counts, alpha_d);
  SmoothedUnigramModel m_dementia(count_tokens(dementia), coll_counts, alpha_d);
  const WordSet vocab = m_control.vocabulary();

  GroupDivergence g;
  g.jaccard = jaccard(p, c);
  g.kl_cd = kl_divergence(m_control, m_dementia, vocab, log_base);
  g.kl_dc = kl_divergence(m_dementia, m_control, vocab, log_base);
  g.control_vocabulary = p.size();
  g.dementia_vocabulary = c.size();
  std::vector<std::string> shared;
  std::set_intersection(p.begin(), p.end(), c.begin(), c.end(), std::back_inserter(shared));
  g.shared_vocabulary = shared.size();
  g.control_tokens = static_cast<long>(control.size());
  g.dementia_tokens = static_cast<long>(dementia.size());
  return g;
}

nlohmann::json to_json(const GroupDivergence& g, double alpha_d, double log_base) {
  return {{"artifact", "divergence"},
          {"alpha_d", alpha_d},
          {"log_base", log_base > 0.0 ? nlohmann::json(log_base) : nlohmann::json("e")},
          {"jaccard", g.jaccard},
          {"kl_cd", g.kl_cd},
          {"kl_dc", g.kl_dc},
          {"control_vocabulary", g.control_vocabulary},
          {"dementia_vocabulary", g.dementia_vocabulary},
          {"shared_vocabulary", g.shared_vocabulary},
          {"control_tokens", g.control_tokens},
          {"dementia_tokens", g.dementia_tokens}};
}

}  // namespace adlex::divergence
