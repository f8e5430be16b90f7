#include "adlex/lime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "adlex/error.hpp"
#include "adlex/rng.hpp"

namespace adlex::lime {

std::vector<std::string> unique_features(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  std::unordered_map<std::string, bool> seen;
  for (const auto& t : tokens) {
    if (seen.emplace(t, true).second) out.push_back(t);
  }
  return out;
}

Perturbation perturb(std::span<const std::string> tokens, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error(Errc::DomainError, "n_samples must be at least 1");
  Perturbation p;
  p.features = unique_features(tokens);
  const std::size_t m = p.features.size();
  if (m == 0) throw Error(Errc::DomainError, "nothing to explain: no tokens");
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < m; ++j) col[p.features[j]] = j;
  std::vector<std::size_t> token_col;
  for (const auto& t : tokens) token_col.push_back(col[t]);

  const Rng base = Rng(seed).derive("lime");
  p.masks.reserve(static_cast<std::size_t>(n_samples));
  p.texts.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Mask mask(m, 1);
    if (i > 0) {
      Rng r = base.derive(static_cast<std::uint64_t>(i));
      const auto n_off = static_cast<std::size_t>(r.uniform_int(1, static_cast<std::int64_t>(m)));
      std::vector<std::size_t> idx(m);
      std::iota(idx.begin(), idx.end(), 0);
      r.shuffle(idx);
      for (std::size_t k = 0; k < n_off; ++k) mask[idx[k]] = 0;
    }
    std::vector<std::string> text;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (mask[token_col[k]]) text.push_back(tokens[k]);
    }
    p.masks.push_back(std::move(mask));
    p.texts.push_back(std::move(text));
  }
  return p;
}

double cosine_distance(const Mask& mask) {
  if (mask.empty()) throw Error(Errc::DomainError, "empty mask");
  std::size_t on = 0;
  for (auto b : mask) on += b ? 1 : 0;
  if (on == 0) return 1.0;
  // <mask, 1> / (|mask| |1|) = on / sqrt(on * m)
  return 1.0 - std::sqrt(static_cast<double>(on) / static_cast<double>(mask.size()));
}

double kernel_weight(const Mask& mask, double kernel_width) {
  if (!(kernel_width > 0.0)) throw Error(Errc::DomainError, "kernel width must be positive");
  const double d = cosine_distance(mask);
  return std::exp(-(d * d) / (kernel_width * kernel_width));
}

namespace {

// Solves the weighted, centered ridge problem restricted to `cols`.
Surrogate ridge_fit(const std::vector<Mask>& X, std::span<const double> y, std::span<const double> w,
                    const std::vector<std::size_t>& cols, double lambda) {
  const std::size_t n = X.size();
  const std::size_t p = cols.size();
  double wsum = 0.0, ybar = 0.0;
  std::vector<double> xbar(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w[i];
    ybar += w[i] * y[i];
    for (std::size_t a = 0; a < p; ++a) xbar[a] += w[i] * X[i][cols[a]];
  }
  if (!(wsum > 0.0)) throw Error(Errc::SingularSystem, "sample weights sum to zero");
  ybar /= wsum;
  for (auto& v : xbar) v /= wsum;

  std::vector<double> A(p * p, 0.0), b(p, 0.0), xc(p);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t a = 0; a < p; ++a) xc[a] = X[i][cols[a]] - xbar[a];
    const double yc = y[i] - ybar;
    for (std::size_t a = 0; a < p; ++a) {
      const double wa = w[i] * xc[a];
      b[a] += wa * yc;
      for (std::size_t c = 0; c <= a; ++c) A[a * p + c] += wa * xc[c];
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    A[a * p + a] += lambda;
    for (std::size_t c = 0; c < a; ++c) A[c * p + a] = A[a * p + c];
  }

  // Cholesky A = L L^T, in place in the lower triangle.
  for (std::size_t j = 0; j < p; ++j) {
    double diag = A[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= A[j * p + k] * A[j * p + k];
    if (!(diag > 1e-300)) throw Error(Errc::SingularSystem, "normal equations are not positive definite");
    const double ljj = std::sqrt(diag);
    A[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = A[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= A[i * p + k] * A[j * p + k];
      A[i * p + j] = s / ljj;
    }
  }
  std::vector<double> z(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= A[i * p + k] * z[k];
    z[i] = s / A[i * p + i];
  }
  std::vector<double> beta(p);
  for (std::size_t i = p; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < p; ++k) s -= A[k * p + i] * beta[k];
    beta[i] = s / A[i * p + i];
  }

  Surrogate out;
  out.features = cols;
  out.weights = beta;
  out.intercept = ybar;
  for (std::size_t a = 0; a < p; ++a) out.intercept -= xbar[a] * beta[a];
  return out;
}

}  // namespace

Surrogate fit_surrogate(const std::vector<Mask>& masks, std::span<const double> targets,
                        std::span<const double> sample_weights, std::size_t n_keep, double ridge) {
  const std::size_t n = masks.size();
  if (n == 0 || targets.size() != n || sample_weights.size() != n) {
    throw Error(Errc::DomainError, "surrogate needs matching, non-empty masks, targets and weights");
  }
  const std::size_t m = masks[0].size();
  for (const auto& row : masks) {
    if (row.size() != m) throw Error(Errc::DomainError, "ragged mask matrix");
  }
  for (double w : sample_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::DomainError, "sample weights must be finite and >= 0");
  }
  if (!(ridge >= 0.0)) throw Error(Errc::DomainError, "ridge must be non-negative");
  if (n_keep == 0) throw Error(Errc::DomainError, "n_keep must be positive");
  const std::size_t keep = std::min(n_keep, m);
  if (n < keep + 1) throw Error(Errc::DomainError, "surrogate needs at least n_keep + 1 samples");

  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), 0);
  Surrogate full = ridge_fit(masks, targets, sample_weights, all, ridge);
  if (keep == m) return full;

  std::vector<std::size_t> order = all;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(full.weights[a]) > std::fabs(full.weights[b]);
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return ridge_fit(masks, targets, sample_weights, order, ridge);
}

Explanation explain(const BatchPredict& predict, const std::string& id, std::span<const std::string> tokens,
                    const Options& opts) {
  if (opts.chunk == 0) throw Error(Errc::DomainError, "chunk size must be positive");
  const Perturbation pert = perturb(tokens, opts.n_samples, opts.seed);
  const std::size_t n = pert.texts.size();
  std::vector<double> probs(n);

  const std::size_t n_chunks = (n + opts.chunk - 1) / opts.chunk;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_chunks);
  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      try {
        const std::size_t lo = c * opts.chunk, hi = std::min(n, lo + opts.chunk);
        std::vector<std::vector<std::string>> batch(pert.texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                                    pert.texts.begin() + static_cast<std::ptrdiff_t>(hi));
        const auto out = predict(batch);
        if (out.size() != batch.size()) throw Error(Errc::DomainError, "predictor returned a wrong-sized batch");
        std::copy(out.begin(), out.end(), probs.begin() + static_cast<std::ptrdiff_t>(lo));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(n_chunks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = kernel_weight(pert.masks[i], opts.kernel_width);
  const Surrogate s = fit_surrogate(pert.masks, probs, weights, opts.n_features_keep, opts.ridge);

  Explanation e;
  e.id = id;
  e.prob = probs[0];
  e.intercept = s.intercept;
  e.local_prediction = s.intercept;
  for (std::size_t a = 0; a < s.features.size(); ++a) {
    e.tokens.push_back({pert.features[s.features[a]], s.weights[a]});
    e.local_prediction += s.weights[a];
  }
  std::sort(e.tokens.begin(), e.tokens.end(), [](const TokenWeight& a, const TokenWeight& b) {
    const double wa = std::fabs(a.weight), wb = std::fabs(b.weight);
    if (wa != wb) return wa > wb;
    return a.token < b.token;
  });
  e.seed = opts.seed;
  e.n_samples = opts.n_samples;
  e.kernel_width = opts.kernel_width;
  e.n_features = pert.features.size();
  return e;
}

nlohmann::json Explanation::to_json() const {
  nlohmann::json toks = nlohmann::json::array();
  for (const auto& t : tokens) toks.push_back({{"token", t.token}, {"weight", t.weight}});
  return {{"artifact", "explanation"},
          {"id", id},
          {"prob", prob},
          {"tokens", std::move(toks)},
          {"intercept", intercept},
          {"local_prediction", local_prediction},
          {"residual", prob - local_prediction},
          {"seed", seed},
          {"n_samples", n_samples},
          {"kernel_width", kernel_width},
          {"n_features", n_features}};
}

namespace {

std::string escape_html(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string to_html(const Explanation& e, std::span<const std::string> tokens) {
  std::map<std::string, double> w;
  double max_abs = 0.0;
  for (const auto& t : e.tokens) {
    w[t.token] = t.weight;
    max_abs = std::max(max_abs, std::fabs(t.weight));
  }
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + escape_html(e.id) +
                     "</title>\n<style>body{font-family:sans-serif;max-width:50em;margin:2em auto;line-height:1.8}"
                     "span.t{padding:1px 3px;border-radius:3px}</style></head><body>\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "<h1>%s</h1>\n<p>P(dementia) = %.4f</p>\n", escape_html(e.id).c_str(), e.prob);
  html += buf;
  html += "<p>";
  for (const auto& tok : tokens) {
    auto it = w.find(tok);
    if (it == w.end() || max_abs == 0.0) {
      html += escape_html(tok) + " ";
      continue;
    }
    const double a = std::fabs(it->second) / max_abs;
    // orange (dementia) vs blue (control)
    const char* rgb = it->second > 0 ? "255,140,0" : "30,100,255";
    std::snprintf(buf, sizeof buf, "<span class=\"t\" style=\"background:rgba(%s,%.3f)\" title=\"%.6f\">", rgb,
                  0.15 + 0.85 * a, it->second);
    html += buf + escape_html(tok) + "</span> ";
  }
  html += "</p>\n<table>\n<tr><th>token</th><th>weight</th></tr>\n";
  for (const auto& t : e.tokens) {
    std::snprintf(buf, sizeof buf, "%.6f", t.weight);
    html += "<tr><td>" + escape_html(t.token) + "</td><td>" + buf + "</td></tr>\n";
  }
  html += "</table>\n</body></html>\n";
  return html;
}

}  // namespace adlex::lime
