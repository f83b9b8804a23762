#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/nid_distribution.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/spectral.hpp"

namespace nidtm {

inline constexpr double kProbabilityFloor = 1e-300;

struct PerplexityConfig {
  int samples = 512;
  std::uint64_t seed = 0;
  Exec exec;
};

struct PerplexityResult {
  double perplexity = 0.0;
  double log_likelihood = 0.0;  // sum over documents
  long long words = 0;
  /// Documents with a word of zero probability under every prior draw.
  std::vector<std::size_t> flagged_docs;
};

/// Held-out perplexity with each document likelihood estimated by Monte Carlo
/// over the topic-proportion prior:
///   p(doc) ~ (1/S) sum_s prod_n (A h_s)_{w_n}.
/// Draws for document n come from a seed derived from (seed, n), so the
/// estimate does not depend on the thread count.
inline PerplexityResult perplexity(const TopicModel& model, const Corpus& corpus,
                                   const PerplexityConfig& cfg = {}) {
  model.validate();
  if (corpus.d != model.d())
    fail(ErrorKind::InvalidInput, "model has d = " + std::to_string(model.d()) +
                                      " but corpus has d = " + std::to_string(corpus.d));
  if (cfg.samples < 1) fail(ErrorKind::InvalidInput, "perplexity needs at least one sample");

  const std::size_t n_docs = corpus.docs.size();
  std::vector<double> doc_ll(n_docs, 0.0);
  std::vector<char> flagged(n_docs, 0);
  parallel_for(n_docs, cfg.exec, [&](std::size_t n) {
    const Document& doc = corpus.docs[n];
    if (doc.entries.empty()) return;
    Rng rng = make_rng(cfg.seed, 0xe7a1, n);
    Matrix rows(static_cast<Eigen::Index>(doc.entries.size()), model.k());
    Vector counts(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      rows.row(i) = model.a.row(doc.entries[i].word);
      counts[i] = doc.entries[i].count;
    }
    std::vector<double> logs(cfg.samples);
    bool all_floored = true;
    for (int s = 0; s < cfg.samples; ++s) {
      const Vector h = sample_proportions(model.family, model.alpha, rng);
      const Vector p = rows * h;
      double ll = 0.0;
      bool floored = false;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > kProbabilityFloor)) floored = true;
        ll += counts[i] * std::log(std::max(p[i], kProbabilityFloor));
      }
      all_floored = all_floored && floored;
      logs[s] = ll;
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - top);
    doc_ll[n] = top + std::log(acc / cfg.samples);
    flagged[n] = all_floored;
  });

  PerplexityResult out;
  for (std::size_t n = 0; n < n_docs; ++n) {
    out.log_likelihood += doc_ll[n];
    out.words += corpus.docs[n].length();
    if (flagged[n]) out.flagged_docs.push_back(n);
  }
  if (out.words == 0) fail(ErrorKind::InvalidInput, "perplexity needs at least one word");
  out.perplexity = std::exp(-out.log_likelihood / static_cast<double>(out.words));
  return out;
}

struct PmiResult {
  double mean = 0.0;
  /// Average over distinct word pairs per topic; NaN for topics with fewer
  /// than two distinct top words.
  std::vector<double> per_topic;
};

/// Topic coherence from document co-occurrence:
///   log[ p(wi, wj) / (p(wi) p(wj)) ]
/// averaged over distinct pairs of each topic's top words, then over topics.
/// Pair counts get +1; a word absent from the corpus is counted in one
/// document so the ratio stays finite.
inline PmiResult pmi(const TopicModel& model, const Corpus& corpus, int top_m = 10) {
  if (top_m < 2) fail(ErrorKind::InvalidInput, "PMI needs top_m >= 2");
  if (corpus.docs.size() < 2)
    fail(ErrorKind::InvalidInput, "PMI needs at least 2 documents for co-occurrence");
  if (corpus.d != model.d())
    fail(ErrorKind::InvalidInput, "model and corpus vocabulary sizes differ");

  const auto tops = top_words(model.a, top_m);
  std::unordered_map<int, int> slot;
  for (const auto& topic : tops)
    for (int w : topic) slot.try_emplace(w, static_cast<int>(slot.size()));
  const int m = static_cast<int>(slot.size());

  std::vector<double> df(m, 0.0);
  Matrix co = Matrix::Zero(m, m);
  std::vector<int> present;
  for (const auto& doc : corpus.docs) {
    present.clear();
    for (const auto& e : doc.entries)
      if (auto it = slot.find(e.word); it != slot.end()) present.push_back(it->second);
    for (std::size_t a = 0; a < present.size(); ++a) {
      df[present[a]] += 1.0;
      for (std::size_t b = a + 1; b < present.size(); ++b) {
        co(present[a], present[b]) += 1.0;
        co(present[b], present[a]) += 1.0;
      }
    }
  }

  const double n_docs = static_cast<double>(corpus.docs.size());
  PmiResult out;
  double sum = 0.0;
  int scored = 0;
  for (const auto& topic : tops) {
    double total = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < topic.size(); ++a) {
      for (std::size_t b = a + 1; b < topic.size(); ++b) {
        if (topic[a] == topic[b]) continue;
        const int i = slot.at(topic[a]), j = slot.at(topic[b]);
        const double pij = (co(i, j) + 1.0) / n_docs;
        const double pi = std::max(df[i], 1.0) / n_docs, pj = std::max(df[j], 1.0) / n_docs;
        total += std::log(pij / (pi * pj));
        ++pairs;
      }
    }
    if (pairs == 0) {
      out.per_topic.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.per_topic.push_back(total / pairs);
    sum += total / pairs;
    ++scored;
  }
  if (scored == 0) fail(ErrorKind::InvalidInput, "no topic has two distinct top words");
  out.mean = sum / scored;
  return out;
}

}  // namespace nidtm
