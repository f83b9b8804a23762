#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/nid_distribution.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/spectral.hpp"

namespace nidtm {

struct SynthConfig {
  long n_docs = 1000;
  int doc_len = 100;
  std::uint64_t seed = 0;
  Exec exec;

  void validate() const {
    if (n_docs < 1) fail(ErrorKind::InvalidInput, "n_docs must be at least 1");
    if (doc_len < 3) fail(ErrorKind::InvalidInput, "doc_len must be at least 3");
  }
};

/// Ground-truth latents of one document. `zeta[n]` is the topic of the n-th
/// token in ascending word order, i.e. of `Document::tokens()[n]`.
struct TopicAssignment {
  Vector h;
  std::vector<int> zeta;
};

struct SynthResult {
  Corpus corpus;
  std::vector<TopicAssignment> latents;
};

namespace detail {

inline constexpr std::uint64_t kSynthStream = 0x5e17;

/// Inverse-CDF sampler over a fixed discrete distribution.
class DiscreteTable {
 public:
  explicit DiscreteTable(const Eigen::Ref<const Vector>& p) : cdf_(p.size()) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) cdf_[i] = (acc += p[i]);
    for (auto& c : cdf_) c /= acc;
  }

  template <class R>
  int operator()(R& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace detail

/// Topic-proportion draw, then per token a topic from h and a word from that
/// topic's column.
inline SynthResult generate(const TopicModel& model, const SynthConfig& cfg) {
  model.validate();
  cfg.validate();
  const int k = model.k();
  std::vector<detail::DiscreteTable> columns;
  columns.reserve(k);
  for (int j = 0; j < k; ++j) columns.emplace_back(model.a.col(j));

  SynthResult out;
  out.corpus.d = model.d();
  out.corpus.docs.resize(static_cast<std::size_t>(cfg.n_docs));
  out.latents.resize(static_cast<std::size_t>(cfg.n_docs));

  parallel_for(static_cast<std::size_t>(cfg.n_docs), cfg.exec, [&](std::size_t n) {
    Rng rng = make_rng(cfg.seed, detail::kSynthStream, n);
    Vector h = sample_proportions(model.family, model.alpha, rng);
    const detail::DiscreteTable topics(h);
    std::vector<std::pair<int, int>> tokens(cfg.doc_len);
    for (auto& [word, topic] : tokens) {
      topic = topics(rng);
      word = columns[topic](rng);
    }
    std::sort(tokens.begin(), tokens.end());

    Document doc;
    TopicAssignment& z = out.latents[n];
    z.zeta.reserve(tokens.size());
    for (const auto& [word, topic] : tokens) {
      if (doc.entries.empty() || doc.entries.back().word != word)
        doc.entries.push_back({word, 0});
      ++doc.entries.back().count;
      z.zeta.push_back(topic);
    }
    z.h = std::move(h);
    out.corpus.docs[n] = std::move(doc);
  });
  return out;
}

/// d x k matrix with Dirichlet(concentration, ..., concentration) columns.
inline Matrix random_topic_matrix(int d, int k, double concentration, std::uint64_t seed) {
  if (d < 1 || k < 1) fail(ErrorKind::InvalidInput, "topic matrix needs d >= 1 and k >= 1");
  if (!(concentration > 0.0)) fail(ErrorKind::Domain, "concentration must be positive");
  Matrix a(d, k);
  const IDFamily dirichlet = IDFamily::gamma(1.0);
  const Vector alpha = Vector::Constant(d, concentration);
  for (int j = 0; j < k; ++j) {
    Rng rng = make_rng(seed, 0xa11, static_cast<std::uint64_t>(j));
    a.col(j) = d == 1 ? Vector::Ones(1) : sample_proportions(dirichlet, alpha, rng);
  }
  return a;
}

/// Sidecar ground truth: "docID<TAB>h_1,...,h_k<TAB>zeta_1 zeta_2 ..." with
/// 1-based document ids and 0-based topics.
inline void write_latents(const std::vector<TopicAssignment>& latents, std::ostream& out) {
  char buf[32];
  out << "doc\th\tzeta\n";
  for (std::size_t n = 0; n < latents.size(); ++n) {
    out << (n + 1) << '\t';
    const Vector& h = latents[n].h;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", h[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\t';
    for (std::size_t t = 0; t < latents[n].zeta.size(); ++t)
      out << (t ? " " : "") << latents[n].zeta[t];
    out << '\n';
  }
}

inline void write_latents(const std::vector<TopicAssignment>& latents, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write latent file " + path);
  write_latents(latents, out);
}

}  // namespace nidtm
