#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/nid_distribution.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/tensor.hpp"
#include "nidtm/weights.hpp"

namespace nidtm {

/// Source of the raw third-order moment E[x1 (x) x2 (x) x3]. It is only ever
/// evaluated contracted against a d x k matrix on every mode, so the d^3
/// array is never formed.
class TripleSource {
 public:
  virtual ~TripleSource() = default;
  virtual int dim() const = 0;
  /// E[x1 (x) x2 (x) x3](W, W, W)
  virtual Tensor3 contract(const Matrix& w, const Exec& exec) const = 0;
};

struct MomentSet {
  Vector m1;
  Matrix m2;
  std::shared_ptr<const TripleSource> triples;
  std::size_t doc_count = 0;     // documents contributing to m1
  std::size_t pair_docs = 0;     // documents with >= 2 words (m2)
  std::size_t triple_docs = 0;   // documents with >= 3 words (third order)

  int dim() const { return static_cast<int>(m1.size()); }
};

/// Unbiased per-document estimators summed over documents: ordered pairs and
/// triples of distinct token positions.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(int d) : m1_(Vector::Zero(d)), m2_(Matrix::Zero(d, d)) {}

  void add(const Document& doc) {
    const double n = doc.length();
    if (n < 1) return;
    for (const auto& e : doc.entries) m1_[e.word] += e.count / n;
    ++docs_;
    if (n < 2) return;
    const double s = 1.0 / (n * (n - 1.0));
    for (const auto& a : doc.entries) {
      for (const auto& b : doc.entries) m2_(a.word, b.word) += s * a.count * b.count;
      m2_(a.word, a.word) -= s * a.count;
    }
    ++pairs_;
    if (n >= 3) ++triples_;
  }

  void merge(const MomentAccumulator& o) {
    if (o.docs_ == 0) return;
    if (docs_ == 0 && m1_.size() == 0) {
      *this = o;
      return;
    }
    m1_ += o.m1_;
    m2_ += o.m2_;
    docs_ += o.docs_;
    pairs_ += o.pairs_;
    triples_ += o.triples_;
  }

  std::size_t docs() const { return docs_; }
  std::size_t pair_docs() const { return pairs_; }
  std::size_t triple_docs() const { return triples_; }
  Vector m1() const { return docs_ ? Vector(m1_ / docs_) : m1_; }
  Matrix m2() const { return pairs_ ? Matrix(m2_ / pairs_) : m2_; }

 private:
  Vector m1_;
  Matrix m2_;
  std::size_t docs_ = 0, pairs_ = 0, triples_ = 0;
};

/// Third-order U-statistic over a corpus, evaluated in whitened space:
/// for counts c with length N,
///   sum over distinct ordered triples = c^3 - (diag2(c) (x) c, 3 placements) + 2 diag3(c)
/// divided by N(N-1)(N-2). The diag3 part is linear in c and is pooled per
/// word across documents.
class CorpusTriples : public TripleSource {
 public:
  CorpusTriples(int d, std::vector<Document> docs) : d_(d), docs_(std::move(docs)) {
    diag_weight_ = Vector::Zero(d_);
    for (const auto& doc : docs_) {
      const double n = doc.length();
      const double s = 1.0 / (n * (n - 1.0) * (n - 2.0));
      for (const auto& e : doc.entries) diag_weight_[e.word] += 2.0 * s * e.count;
    }
  }

  int dim() const override { return d_; }
  std::size_t size() const { return docs_.size(); }

  Tensor3 contract(const Matrix& w, const Exec& exec) const override {
    if (w.rows() != d_) fail(ErrorKind::InvalidInput, "whitener row count must equal d");
    const int k = static_cast<int>(w.cols());
    Tensor3 total(k);
    if (docs_.empty()) return total;

    auto partial = [&](std::size_t begin, std::size_t end) {
      Tensor3 t(k);
      Vector y(k);
      Matrix q(k, k);
      for (std::size_t n = begin; n < end; ++n) {
        const Document& doc = docs_[n];
        const double len = doc.length();
        const double s = 1.0 / (len * (len - 1.0) * (len - 2.0));
        y.setZero();
        q.setZero();
        for (const auto& e : doc.entries) {
          const auto row = w.row(e.word);
          y += e.count * row.transpose();
          q.noalias() += e.count * row.transpose() * row;
        }
        t.add_outer(s, y, y, y);
        t.add_pair_placements(-s, q, y);
      }
      return t;
    };
    chunked_reduce(docs_.size(), exec, total, partial,
                   [](Tensor3& acc, const Tensor3& p) { acc += p; });
    for (int i = 0; i < d_; ++i) {
      if (diag_weight_[i] == 0.0) continue;
      const Vector row = w.row(i).transpose();
      total.add_outer(diag_weight_[i], row, row, row);
    }
    total *= 1.0 / static_cast<double>(docs_.size());
    return total;
  }

 private:
  int d_;
  std::vector<Document> docs_;
  Vector diag_weight_;
};

/// Exact third moment of a topic model: E[h (x) h (x) h](A, A, A).
class ExactTriples : public TripleSource {
 public:
  ExactTriples(Matrix a, Tensor3 h3) : a_(std::move(a)), h3_(std::move(h3)) {}
  int dim() const override { return static_cast<int>(a_.rows()); }
  Tensor3 contract(const Matrix& w, const Exec&) const override {
    if (w.rows() != a_.rows()) fail(ErrorKind::InvalidInput, "whitener row count must equal d");
    return h3_.multilinear(Matrix(a_.transpose() * w));
  }

 private:
  Matrix a_;
  Tensor3 h3_;
};

struct AccumulateOptions {
  /// Reject any document shorter than three words instead of using it for
  /// the lower-order moments only.
  bool strict = false;
  Exec exec;
};

inline MomentSet accumulate(const Corpus& corpus, const AccumulateOptions& opt = {}) {
  if (corpus.empty()) fail(ErrorKind::InvalidInput, "cannot estimate moments of an empty corpus");
  if (corpus.d <= 0) fail(ErrorKind::InvalidInput, "corpus vocabulary size must be positive");
  std::vector<Document> long_docs;
  for (std::size_t n = 0; n < corpus.docs.size(); ++n) {
    const int len = corpus.docs[n].length();
    if (len >= 3) {
      long_docs.push_back(corpus.docs[n]);
    } else if (opt.strict) {
      fail(ErrorKind::InvalidInput, "document " + std::to_string(n) + " has " +
                                        std::to_string(len) + " words; at least 3 are required");
    }
    for (const auto& e : corpus.docs[n].entries)
      if (e.word < 0 || e.word >= corpus.d || e.count <= 0)
        fail(ErrorKind::InvalidInput, "document " + std::to_string(n) + " has an invalid entry");
  }
  if (long_docs.empty())
    fail(ErrorKind::InvalidInput, "no document has the three words needed for third-order moments");

  MomentAccumulator acc(corpus.d);
  chunked_reduce(
      corpus.docs.size(), opt.exec, acc,
      [&](std::size_t begin, std::size_t end) {
        MomentAccumulator part(corpus.d);
        for (std::size_t n = begin; n < end; ++n) part.add(corpus.docs[n]);
        return part;
      },
      [](MomentAccumulator& total, const MomentAccumulator& part) { total.merge(part); });

  MomentSet ms;
  ms.m1 = acc.m1();
  ms.m2 = acc.m2();
  ms.doc_count = acc.docs();
  ms.pair_docs = acc.pair_docs();
  ms.triple_docs = long_docs.size();
  ms.triples = std::make_shared<CorpusTriples>(corpus.d, std::move(long_docs));
  return ms;
}

/// Exact moments of h up to third order.
struct HMoments {
  Vector e1;
  Matrix e2;
  Tensor3 e3;
};

inline HMoments exact_h_moments(const NIDModel& model) {
  const int k = model.k();
  HMoments hm{Vector(k), Matrix(k, k), Tensor3(k)};
  MultiIndex r(k);
  auto eval = [&](std::initializer_list<int> idx) {
    r.assign(k, 0);
    for (int i : idx) ++r[i];
    return moment(model, r);
  };
  for (int i = 0; i < k; ++i) {
    hm.e1[i] = eval({i});
    for (int j = i; j < k; ++j) {
      hm.e2(i, j) = hm.e2(j, i) = eval({i, j});
      for (int l = j; l < k; ++l) {
        const double v = eval({i, j, l});
        const int p[6][3] = {{i, j, l}, {i, l, j}, {j, i, l}, {j, l, i}, {l, i, j}, {l, j, i}};
        for (const auto& q : p) hm.e3(q[0], q[1], q[2]) = v;
      }
    }
  }
  return hm;
}

/// Moments of a topic model with word distributions in the columns of `a`.
inline MomentSet exact_moment_set(const HMoments& hm, const Matrix& a) {
  if (a.cols() != hm.e1.size()) fail(ErrorKind::InvalidInput, "A must have k columns");
  MomentSet ms;
  ms.m1 = a * hm.e1;
  ms.m2 = a * hm.e2 * a.transpose();
  ms.triples = std::make_shared<ExactTriples>(a, hm.e3);
  return ms;
}

/// m2 + v m1 m1^T
inline Matrix build_m2(const MomentSet& ms, const Weights& w) {
  if (ms.m2.rows() != ms.m1.size() || ms.m2.cols() != ms.m1.size())
    fail(ErrorKind::InvalidInput, "moment set has inconsistent dimensions");
  return ms.m2 + w.v * ms.m1 * ms.m1.transpose();
}

/// raw + v2 y^3 + v1 (P (x) y over its three placements), symmetrized,
/// where y and P are the (possibly whitened) first and second moments.
inline Tensor3 combine_third_order(Tensor3 raw, const Matrix& p, const Vector& y,
                                   const Weights& w) {
  raw.add_outer(w.v2, y, y, y);
  raw.add_pair_placements(w.v1, p, y);
  raw.symmetrize();
  return raw;
}

/// Centered moments of h itself: E[hh] + v E[h]E[h] and its third-order
/// analogue. With the right weights both are diagonal.
inline Matrix centered_h_m2(const HMoments& hm, const Weights& w) {
  return hm.e2 + w.v * hm.e1 * hm.e1.transpose();
}

inline Tensor3 centered_h_m3(const HMoments& hm, const Weights& w) {
  return combine_third_order(hm.e3, hm.e2, hm.e1, w);
}

inline Tensor3 build_whitened_m3(const MomentSet& ms, const Weights& w, const Matrix& whitener,
                                 const Exec& exec = {}) {
  if (whitener.rows() != ms.m1.size())
    fail(ErrorKind::InvalidInput, "whitener has " + std::to_string(whitener.rows()) +
                                      " rows, expected d = " + std::to_string(ms.m1.size()));
  if (!ms.triples) fail(ErrorKind::InvalidInput, "moment set has no third-order source");
  const Vector y = whitener.transpose() * ms.m1;
  const Matrix p = whitener.transpose() * ms.m2 * whitener;
  return combine_third_order(ms.triples->contract(whitener, exec), p, y, w);
}

}  // namespace nidtm
