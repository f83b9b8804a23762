#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/nid_distribution.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/spectral.hpp"

namespace nidtm {

inline double dirichlet_log_pdf(const Vector& x, const Vector& a) {
  double out = std::lgamma(a.sum());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out += (a[i] - 1.0) * std::log(x[i]) - std::lgamma(a[i]);
  return out;
}

/// Log prior density of the topic proportions. Gamma families use the
/// Dirichlet closed form; other families go through the quadrature density,
/// memoized on h rounded to 1e-6.
class PriorDensity {
 public:
  static constexpr double kQuantum = 1e-6;
  static constexpr std::size_t kMaxCache = 1 << 20;

  explicit PriorDensity(const TopicModel& model) : model_(model.family, model.alpha) {
    if (model.family.kind() != FamilyKind::Gamma && !has_closed_form_density(model.family))
      fail(ErrorKind::Unsupported, "no prior density for family " + model.family.spec());
  }

  double log(const Vector& h) {
    if (model_.family().kind() == FamilyKind::Gamma) return dirichlet_log_pdf(h, model_.alpha());
    std::vector<long long> key(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) key[i] = std::llround(h[i] / kQuantum);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double v = log_density(model_, SimplexPoint::normalized(h));
    if (cache_.size() >= kMaxCache) cache_.clear();
    cache_.emplace(std::move(key), v);
    return v;
  }

  std::size_t cache_size() const { return cache_.size(); }
  const NIDModel& model() const { return model_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<long long>& k) const {
      std::uint64_t x = 0;
      for (long long v : k) x = mix_seed(x ^ static_cast<std::uint64_t>(v));
      return static_cast<std::size_t>(x);
    }
  };

  NIDModel model_;
  std::unordered_map<std::vector<long long>, double, KeyHash> cache_;
};

/// n_i: number of tokens assigned to topic i.
inline Vector topic_counts(const std::vector<int>& zeta, int k) {
  Vector n = Vector::Zero(k);
  for (int z : zeta) {
    if (z < 0 || z >= k) fail(ErrorKind::InvalidInput, "topic index out of range");
    n[z] += 1.0;
  }
  return n;
}

/// log f(h) + sum_i n_i log h_i + sum_n log A[w_n, zeta_n], where zeta[n]
/// is the topic of `doc.tokens()[n]`.
inline double log_posterior(const Vector& h, const std::vector<int>& zeta, const Document& doc,
                            const TopicModel& model, PriorDensity& prior) {
  const int k = model.k();
  if (h.size() != k) fail(ErrorKind::InvalidInput, "h must have k coordinates");
  if (!((h.array() > 0.0).all())) fail(ErrorKind::Domain, "h must lie in the simplex interior");
  const std::vector<int> tokens = doc.tokens();
  if (tokens.size() != zeta.size())
    fail(ErrorKind::InvalidInput, "zeta has " + std::to_string(zeta.size()) +
                                      " entries but the document has " +
                                      std::to_string(tokens.size()) + " tokens");
  const Vector n = topic_counts(zeta, k);
  double out = prior.log(h) + (n.array() * h.array().log()).sum();
  for (std::size_t t = 0; t < tokens.size(); ++t) out += std::log(model.a(tokens[t], zeta[t]));
  return out;
}

inline double log_posterior(const SimplexPoint& h, const std::vector<int>& zeta,
                            const Document& doc, const TopicModel& model) {
  PriorDensity prior(model);
  return log_posterior(h.values(), zeta, doc, model, prior);
}

/// Log Metropolis-Hastings acceptance ratio
///   [pi(new) q(old | new)] / [pi(old) q(new | old)].
inline double hastings_log_ratio(double log_target_new, double log_target_old,
                                 double log_q_forward, double log_q_backward) {
  return (log_target_new - log_target_old) + (log_q_backward - log_q_forward);
}

struct ChainConfig {
  long steps = 2000;
  long burn_in = 500;
  long thin = 1;
  double concentration = 50.0;
  std::uint64_t seed = 0;
  /// Store every kept state; otherwise only the running mean is kept.
  bool keep_samples = true;
};

struct ChainState {
  Vector h;
  std::vector<int> zeta;
  double log_post = 0.0;
  long step = 0;
};

struct ChainResult {
  std::vector<ChainState> samples;
  Vector posterior_mean;
  long kept = 0;
  double acceptance_rate = 0.0;
  /// Acceptance after burn-in outside [0.05, 0.95].
  bool acceptance_flag = false;
};

inline constexpr double kAcceptanceLow = 0.05;
inline constexpr double kAcceptanceHigh = 0.95;

namespace detail {

inline bool dirichlet_draw(const Vector& a, Rng& rng, Vector& out) {
  Vector logz(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) logz[i] = log_gamma_variate(a[i], rng);
  if (!logz.allFinite()) return false;
  out = (logz.array() - logz.maxCoeff()).exp();
  out /= out.sum();
  return (out.array() > 0.0).all() && out.allFinite();
}

}  // namespace detail

/// Alternates a Metropolis-Hastings move on h, proposing from
/// Dir(concentration * h), with exact Gibbs updates of every zeta_n.
inline ChainResult run_chain(const Document& doc, const TopicModel& model,
                             const ChainConfig& cfg) {
  model.validate();
  const int k = model.k();
  if (k < 2) fail(ErrorKind::InvalidInput, "inference needs k >= 2 topics");
  if (cfg.steps <= cfg.burn_in || cfg.burn_in < 0)
    fail(ErrorKind::InvalidInput, "steps must exceed burn_in");
  if (cfg.thin < 1) fail(ErrorKind::InvalidInput, "thin must be at least 1");
  if (!(cfg.concentration > 0.0)) fail(ErrorKind::Domain, "proposal concentration must be positive");

  const std::vector<int> tokens = doc.tokens();
  for (int w : tokens) {
    if (w < 0 || w >= model.d()) fail(ErrorKind::InvalidInput, "word id out of range");
    if (!(model.a.row(w).maxCoeff() > 0.0))
      fail(ErrorKind::Domain, "word " + std::to_string(w + 1) + " has zero probability in every topic");
  }

  PriorDensity prior(model);
  Rng rng = make_rng(cfg.seed, 0xc4a1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector h = model.alpha / model.alpha0();
  std::vector<int> zeta(tokens.size(), 0);
  Vector weights(k);
  auto gibbs = [&] {
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      weights = h.cwiseProduct(model.a.row(tokens[t]).transpose());
      double u = unif(rng) * weights.sum();
      int j = 0;
      while (j < k - 1 && u >= weights[j]) u -= weights[j++];
      zeta[t] = j;
    }
  };
  auto target = [&](const Vector& x, const Vector& n) {
    return prior.log(x) + (n.array() * x.array().log()).sum();
  };

  gibbs();
  double word_term = 0.0;
  auto refresh_word_term = [&] {
    word_term = 0.0;
    for (std::size_t t = 0; t < tokens.size(); ++t) word_term += std::log(model.a(tokens[t], zeta[t]));
  };

  ChainResult out;
  out.posterior_mean = Vector::Zero(k);
  long accepted = 0, proposed = 0;
  Vector prop(k);
  for (long step = 1; step <= cfg.steps; ++step) {
    const Vector n = topic_counts(zeta, k);
    const double current = target(h, n);
    bool accept = false;
    if (detail::dirichlet_draw(cfg.concentration * h, rng, prop)) {
      const double candidate = target(prop, n);
      const double ratio = hastings_log_ratio(candidate, current,
                                              dirichlet_log_pdf(prop, cfg.concentration * h),
                                              dirichlet_log_pdf(h, cfg.concentration * prop));
      accept = std::isfinite(candidate) && std::log(unif(rng)) < ratio;
    }
    if (accept) h = prop;
    gibbs();

    if (step <= cfg.burn_in) continue;
    ++proposed;
    accepted += accept;
    if ((step - cfg.burn_in) % cfg.thin != 0) continue;
    out.posterior_mean += h;
    ++out.kept;
    if (cfg.keep_samples) {
      refresh_word_term();
      const Vector counts = topic_counts(zeta, k);
      out.samples.push_back({h, zeta, target(h, counts) + word_term, step});
    }
  }
  out.posterior_mean /= static_cast<double>(out.kept);
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  out.acceptance_flag =
      out.acceptance_rate < kAcceptanceLow || out.acceptance_rate > kAcceptanceHigh;
  return out;
}

struct InferenceResult {
  Matrix posterior_mean;  // documents x k
  std::vector<double> acceptance;
  std::vector<char> flagged;
};

/// One independent chain per document.
inline InferenceResult infer_corpus(const TopicModel& model, const Corpus& corpus,
                                    ChainConfig cfg, const Exec& exec = {}) {
  if (corpus.d != model.d()) fail(ErrorKind::InvalidInput, "model and corpus vocabulary sizes differ");
  cfg.keep_samples = false;
  const std::size_t n = corpus.docs.size();
  InferenceResult out{Matrix(static_cast<Eigen::Index>(n), model.k()), std::vector<double>(n),
                      std::vector<char>(n)};
  parallel_for(n, exec, [&](std::size_t i) {
    ChainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 0x1f3, i);
    const ChainResult r = run_chain(corpus.docs[i], model, c);
    out.posterior_mean.row(static_cast<Eigen::Index>(i)) = r.posterior_mean.transpose();
    out.acceptance[i] = r.acceptance_rate;
    out.flagged[i] = r.acceptance_flag;
  });
  return out;
}

}  // namespace nidtm
