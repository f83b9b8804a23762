#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/levy_exponent.hpp"
#include "nidtm/moments.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/tensor.hpp"
#include "nidtm/weights.hpp"

namespace nidtm {

/// Topic-word matrix (d x k, columns on the simplex), concentration vector
/// and the Levy family of the topic-proportion prior.
struct TopicModel {
  Matrix a;
  Vector alpha;
  IDFamily family = IDFamily::gamma(1.0);

  int d() const { return static_cast<int>(a.rows()); }
  int k() const { return static_cast<int>(a.cols()); }
  double alpha0() const { return alpha.sum(); }

  void validate() const {
    if (a.cols() != alpha.size())
      fail(ErrorKind::InvalidInput, "topic model: A has " + std::to_string(a.cols()) +
                                        " columns but alpha has " + std::to_string(alpha.size()));
    if (a.cols() < 1 || a.rows() < 1) fail(ErrorKind::InvalidInput, "topic model is empty");
    if ((alpha.array() <= 0.0).any()) fail(ErrorKind::Domain, "alpha must be positive");
    for (int j = 0; j < k(); ++j) {
      if ((a.col(j).array() < 0.0).any() || std::abs(a.col(j).sum() - 1.0) > 1e-8)
        fail(ErrorKind::InvalidInput, "column " + std::to_string(j) + " of A is not a distribution");
    }
  }

  /// Smallest singular value of A; zero means dependent columns.
  double min_singular_value() const {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().minCoeff();
  }
};

struct Whitening {
  Matrix w;           // d x k, W^T M2 W = I
  Matrix unwhiten;    // d x k, U diag(sigma)^{1/2}
  Vector eigenvalues; // top k eigenvalues of M2, descending
  double next_eigenvalue = 0.0;  // (k+1)-th eigenvalue, 0 when k = d
};

inline Whitening whiten(const Matrix& m2, int k) {
  if (m2.rows() != m2.cols()) fail(ErrorKind::InvalidInput, "M2 must be square");
  if (k < 1 || k > m2.rows())
    fail(ErrorKind::InvalidInput, "k must be in 1..d, got " + std::to_string(k));
  const Matrix sym = 0.5 * (m2 + m2.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorKind::RankDeficient, "eigendecomposition of M2 failed");
  const Eigen::Index d = sym.rows();
  // Eigen returns ascending eigenvalues.
  Whitening out;
  out.eigenvalues.resize(k);
  Matrix u(d, k);
  for (int j = 0; j < k; ++j) {
    out.eigenvalues[j] = eig.eigenvalues()[d - 1 - j];
    u.col(j) = eig.eigenvectors().col(d - 1 - j);
  }
  out.next_eigenvalue = k < d ? eig.eigenvalues()[d - 1 - k] : 0.0;
  const double kth = out.eigenvalues[k - 1];
  if (!(kth > 1e-10)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "M2 has only %d usable directions: eigenvalue %d is %.3g (largest %.3g)",
                  static_cast<int>((out.eigenvalues.array() > 1e-10).count()), k, kth,
                  out.eigenvalues[0]);
    fail(ErrorKind::RankDeficient, buf);
  }
  out.w = u * out.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  out.unwhiten = u * out.eigenvalues.cwiseSqrt().asDiagonal();
  return out;
}

struct PowerConfig {
  int restarts = 30;
  int iterations = 100;
  double tolerance = 1e-8;
  /// Components with |eigenvalue| below this fraction of ||T||_F end the
  /// decomposition.
  double rank_tolerance = 1e-10;
  std::uint64_t seed = 0;
  Exec exec;
};

struct DecompositionResult {
  std::vector<Vector> components;
  std::vector<double> eigenvalues;
  std::vector<double> kappas;   // filled by recover()
  std::vector<double> lambdas;  // filled by recover()
  double residual = 0.0;
  int restarts_used = 0;
  bool converged = true;
  bool rank_exhausted = false;
};

namespace detail {

struct PowerRun {
  Vector u;
  double eigenvalue = 0.0;
  bool converged = false;
};

inline PowerRun power_iterate(const Tensor3& t, Vector u, int iterations, double tol) {
  PowerRun run;
  for (int it = 0; it < iterations; ++it) {
    Vector next = t.apply_two(u);
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    next /= norm;
    // negative eigenvalues flip the sign every step; compare up to sign
    const double diff = std::min((next - u).norm(), (next + u).norm());
    u = next;
    if (diff < tol) {
      run.converged = true;
      break;
    }
  }
  run.u = u;
  run.eigenvalue = t.apply_three(u);
  return run;
}

}  // namespace detail

/// Robust tensor power method with deflation.
inline DecompositionResult decompose(const Tensor3& input, int max_components,
                                     const PowerConfig& cfg = {}) {
  const int k = input.dim();
  DecompositionResult out;
  Tensor3 t = input;
  const double scale = input.frobenius_norm();
  if (scale == 0.0) {
    out.rank_exhausted = true;
    return out;
  }
  for (int c = 0; c < std::min(k, max_components); ++c) {
    std::vector<detail::PowerRun> runs(cfg.restarts);
    parallel_for(static_cast<std::size_t>(cfg.restarts), cfg.exec, [&](std::size_t r) {
      Rng rng = make_rng(cfg.seed, 0x7e50 + c, r);
      std::normal_distribution<double> normal;
      Vector u(k);
      for (int i = 0; i < k; ++i) u[i] = normal(rng);
      u.normalize();
      runs[r] = detail::power_iterate(t, u, cfg.iterations, cfg.tolerance);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
      if (std::abs(runs[r].eigenvalue) > std::abs(runs[best].eigenvalue)) best = r;
    out.restarts_used += cfg.restarts;
    detail::PowerRun polished =
        detail::power_iterate(t, runs[best].u, cfg.iterations, cfg.tolerance);
    if (!polished.converged) out.converged = false;
    if (std::abs(polished.eigenvalue) < cfg.rank_tolerance * scale) {
      out.rank_exhausted = true;
      break;
    }
    t.add_outer(-polished.eigenvalue, polished.u, polished.u, polished.u);
    out.components.push_back(polished.u);
    out.eigenvalues.push_back(polished.eigenvalue);
  }
  out.residual = t.frobenius_norm();
  return out;
}

/// Frobenius norm of T - sum_j eig_j u_j^3, relative to ||T||.
inline double relative_reconstruction_error(const Tensor3& t, const DecompositionResult& dr) {
  Tensor3 r = t;
  for (std::size_t j = 0; j < dr.components.size(); ++j)
    r.add_outer(-dr.eigenvalues[j], dr.components[j], dr.components[j], dr.components[j]);
  const double n = t.frobenius_norm();
  return n > 0 ? r.frobenius_norm() / n : r.frobenius_norm();
}

/// Minimizes ||A h - m1|| over the probability simplex by accelerated
/// projected gradient.
inline Vector simplex_least_squares(const Matrix& a, const Vector& m1) {
  const int k = static_cast<int>(a.cols());
  auto project = [k](Vector v) {
    // Euclidean projection onto the simplex (sort-based)
    Vector s = v;
    std::sort(s.data(), s.data() + k, std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (int i = 0; i < k; ++i) {
      cum += s[i];
      const double t = (cum - 1.0) / (i + 1);
      if (s[i] - t > 0) theta = t;
    }
    return Vector((v.array() - theta).max(0.0));
  };
  const Matrix g = a.transpose() * a;
  const Vector b = a.transpose() * m1;
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Matrix>(g).eigenvalues().maxCoeff();
  if (!(lipschitz > 0)) return Vector::Constant(k, 1.0 / k);
  Vector x = Vector::Constant(k, 1.0 / k), y = x;
  double t = 1.0;
  for (int it = 0; it < 20000; ++it) {
    const Vector next = project(y - (g * y - b) / lipschitz);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    const double step = (next - x).norm();
    x = next;
    t = t_next;
    if (step < 1e-14) break;
  }
  return x;
}

struct Recovery {
  TopicModel model;
  std::vector<int> degenerate_columns;
  /// alpha_j = kappa_j / (-Omega(1,2,0)), which holds for every homogeneous
  /// family; reported for comparison with the first-moment estimate.
  Vector alpha_from_kappa;
  double alpha0_used = 0.0;
};

/// alpha0 such that alpha0 * (-Omega(1,2,0; alpha0)) equals sum_j kappa_j.
/// The left side decreases in alpha0; when the target is outside the range
/// reachable in [1e-3, 1e4] the nearest reachable end is returned.
inline double fit_alpha0(const IDFamily& family, double kappa_sum) {
  if (!(kappa_sum > 0.0)) fail(ErrorKind::Domain, "cannot fit alpha0 from nonpositive kappas");
  // a common rescaling of alpha leaves normalized stable proportions unchanged
  if (family.kind() == FamilyKind::GammaStable)
    fail(ErrorKind::Unsupported, "alpha0 is not identifiable for the stable family; pass a value");
  auto f = [&](double log_a0) {
    const double a0 = std::exp(log_a0);
    return a0 * -omega(family, a0, {1, 2, 0}).value - kappa_sum;
  };
  const double step = std::log(10.0), floor = std::log(1e-3), ceil = std::log(1e4);
  double lo = std::log(0.1), hi = std::log(10.0);
  double flo = f(lo), fhi = f(hi);
  while (flo < 0.0 && lo - step >= floor - 1e-9) {
    try {
      const double v = f(lo - step);
      hi = lo;
      fhi = flo;
      lo -= step;
      flo = v;
    } catch (const Error&) {
      break;  // quadrature no longer reliable this close to zero
    }
  }
  while (fhi > 0.0 && hi + step <= ceil + 1e-9) {
    const double v = f(hi + step);
    lo = hi;
    flo = fhi;
    hi += step;
    fhi = v;
  }
  if (flo < 0.0) return std::exp(lo);
  if (fhi > 0.0) return std::exp(hi);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

/// Un-whitens the components into topic columns and estimates alpha.
/// `alpha0` empty means: fit it from the recovered kappas.
inline Recovery recover(DecompositionResult& dr, const Matrix& unwhiten, const Vector& m1,
                        const IDFamily& family, std::optional<double> alpha0) {
  const int k = static_cast<int>(dr.components.size());
  if (k == 0) fail(ErrorKind::Decomposition, "decomposition produced no components");
  const int d = static_cast<int>(unwhiten.rows());
  Recovery out;
  out.model.family = family;
  out.model.a.resize(d, k);
  dr.kappas.assign(k, 0.0);
  dr.lambdas.assign(k, 0.0);
  for (int j = 0; j < k; ++j) {
    Vector col = unwhiten * dr.components[j];
    double total = col.sum();
    if (total < 0) {
      col = -col;
      total = -total;
      dr.components[j] = -dr.components[j];
      dr.eigenvalues[j] = -dr.eigenvalues[j];
    }
    // unwhiten u_j = sqrt(kappa_j) a_j and a_j sums to one
    dr.kappas[j] = total * total;
    dr.lambdas[j] = dr.eigenvalues[j] * std::pow(dr.kappas[j], 1.5);
    Vector clipped = col.cwiseMax(0.0);
    const double mass = clipped.sum();
    if (!(mass > 0.0)) {
      out.degenerate_columns.push_back(j);
      clipped = Vector::Constant(d, 1.0 / d);
    } else {
      clipped /= mass;
    }
    out.model.a.col(j) = clipped;
  }

  double kappa_sum = 0.0;
  for (double x : dr.kappas) kappa_sum += x;
  out.alpha0_used = alpha0 ? *alpha0 : fit_alpha0(family, kappa_sum);
  if (!(out.alpha0_used > 0.0)) fail(ErrorKind::Domain, "alpha0 must be positive");

  Vector h = simplex_least_squares(out.model.a, m1);
  // keep alpha strictly positive so the prior stays proper
  h = h.cwiseMax(1e-6);
  h /= h.sum();
  out.model.alpha = out.alpha0_used * h;

  const double neg_o120 = -omega(family, out.alpha0_used, {1, 2, 0}).value;
  out.alpha_from_kappa.resize(k);
  for (int j = 0; j < k; ++j) out.alpha_from_kappa[j] = dr.kappas[j] / neg_o120;
  return out;
}

struct LearnConfig {
  PowerConfig power;
  AccumulateOptions moments;
  /// When set, these weights are used instead of the family's.
  std::optional<Weights> weights_override;
};

struct LearnReport {
  Weights weights;
  Vector m2_eigenvalues;
  double next_eigenvalue = 0.0;
  DecompositionResult decomposition;
  double relative_residual = 0.0;
  Vector alpha_from_kappa;
  std::vector<int> degenerate_columns;
  /// Set when the k-th eigenvalue of M2 or the k-th tensor eigenvalue is
  /// small compared to the leading one, i.e. k likely exceeds the rank.
  bool weak_spectrum = false;
};

struct LearnResult {
  TopicModel model;
  LearnReport report;
};

inline constexpr double kWeakSpectrumRatio = 0.05;

namespace detail {

inline LearnResult learn_once(const MomentSet& ms, const IDFamily& family, int k,
                              double weight_alpha0, std::optional<double> alpha0,
                              const LearnConfig& cfg) {
  LearnResult res;
  res.report.weights = cfg.weights_override
                           ? *cfg.weights_override
                           : in_stage("weights", [&] { return compute_weights(family, weight_alpha0); });
  const Matrix m2 = in_stage("m2", [&] { return build_m2(ms, res.report.weights); });
  const Whitening wh = in_stage("whiten", [&] { return whiten(m2, k); });
  res.report.m2_eigenvalues = wh.eigenvalues;
  res.report.next_eigenvalue = wh.next_eigenvalue;
  const Tensor3 t = in_stage("m3", [&] {
    return build_whitened_m3(ms, res.report.weights, wh.w, cfg.power.exec);
  });
  DecompositionResult dr = in_stage("decompose", [&] { return decompose(t, k, cfg.power); });
  res.report.relative_residual = relative_reconstruction_error(t, dr);
  Recovery rec = in_stage("recover", [&] { return recover(dr, wh.unwhiten, ms.m1, family, alpha0); });
  res.model = std::move(rec.model);
  res.report.alpha_from_kappa = rec.alpha_from_kappa;
  res.report.degenerate_columns = rec.degenerate_columns;

  double top_eig = 0.0, low_eig = std::numeric_limits<double>::infinity();
  for (double e : dr.eigenvalues) {
    top_eig = std::max(top_eig, std::abs(e));
    low_eig = std::min(low_eig, std::abs(e));
  }
  res.report.weak_spectrum = static_cast<int>(dr.components.size()) < k ||
                             wh.eigenvalues[k - 1] < kWeakSpectrumRatio * wh.eigenvalues[0] ||
                             low_eig < kWeakSpectrumRatio * top_eig;
  res.report.decomposition = std::move(dr);
  return res;
}

}  // namespace detail

/// Spectral learning from precomputed moments. With `alpha0` empty the
/// concentration is fitted: alpha0 is the value whose weights reproduce it
/// through the kappa-based estimate, found by bisection on log alpha0.
inline LearnResult learn_from_moments(const MomentSet& ms, const IDFamily& family, int k,
                                      std::optional<double> alpha0, const LearnConfig& cfg = {}) {
  if (alpha0) return detail::learn_once(ms, family, k, *alpha0, alpha0, cfg);
  auto run = [&](double log_a0) {
    LearnResult res = detail::learn_once(ms, family, k, std::exp(log_a0), std::nullopt, cfg);
    const double gap = std::log(res.model.alpha0()) - log_a0;
    return std::pair{gap, std::move(res)};
  };
  const double step = std::log(4.0), floor = std::log(1e-2), ceil = std::log(1e3);
  double lo = 0.0, hi = 0.0;
  auto [glo, rlo] = run(lo);
  if (glo == 0.0) return rlo;
  double ghi = glo;
  // the gap rises through zero at the fixed point
  if (glo < 0.0) {
    while (ghi < 0.0) {
      lo = hi;
      if (hi + step > ceil + 1e-9) fail(ErrorKind::Domain, "alpha0 fit: no fixed point below 1e3");
      hi += step;
      ghi = run(hi).first;
    }
  } else {
    hi = lo;
    while (glo > 0.0) {
      hi = lo;
      if (lo - step < floor - 1e-9) fail(ErrorKind::Domain, "alpha0 fit: no fixed point above 1e-2");
      lo -= step;
      glo = run(lo).first;
    }
  }
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (run(mid).first < 0.0) lo = mid;
    else hi = mid;
  }
  return run(0.5 * (lo + hi)).second;
}

inline LearnResult learn(const Corpus& corpus, const IDFamily& family, int k,
                         std::optional<double> alpha0, const LearnConfig& cfg = {}) {
  if (corpus.empty()) fail(ErrorKind::InvalidInput, "learn: corpus is empty");
  if (k < 1 || k > corpus.d)
    fail(ErrorKind::InvalidInput, "learn: k must be in 1..d, got " + std::to_string(k));
  const MomentSet ms = in_stage("moments", [&] { return accumulate(corpus, cfg.moments); });
  return learn_from_moments(ms, family, k, alpha0, cfg);
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr const char* kModelFormatTag = "nidtm-model";
inline constexpr int kModelFormatVersion = 1;

/// Header lines (tag, d, k, family, alpha) followed by one line per topic
/// holding that column of A; all values tab separated.
inline void write_model(const TopicModel& model, std::ostream& out) {
  char buf[32];
  auto num = [&buf](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  out << kModelFormatTag << '\t' << kModelFormatVersion << '\n';
  out << "d\t" << model.d() << '\n';
  out << "k\t" << model.k() << '\n';
  out << "family\t" << model.family.spec() << '\n';
  out << "alpha";
  for (int j = 0; j < model.k(); ++j) out << '\t' << num(model.alpha[j]);
  out << '\n';
  for (int j = 0; j < model.k(); ++j) {
    for (int i = 0; i < model.d(); ++i) out << (i ? "\t" : "") << num(model.a(i, j));
    out << '\n';
  }
}

inline void write_model(const TopicModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write model file " + path);
  write_model(model, out);
}

inline TopicModel read_model(std::istream& in, const std::string& source = "<stream>") {
  long line_no = 0;
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) detail::parse_fail(source, line_no + 1, std::string("missing ") + what);
    ++line_no;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
      fields.back().pop_back();
    return fields;
  };
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      detail::parse_fail(source, line_no, "'" + s + "' is not a number");
    }
  };

  auto tag = next("format tag");
  if (tag.size() != 2 || tag[0] != kModelFormatTag)
    detail::parse_fail(source, line_no, "not a model file");
  if (static_cast<int>(number(tag[1])) > kModelFormatVersion)
    detail::parse_fail(source, line_no, "model format version " + tag[1] + " is newer than supported");

  int d = 0, k = 0;
  std::optional<IDFamily> family;
  Vector alpha;
  // key/value header lines until all required keys are present; unknown
  // keys are skipped so later versions can add fields
  while (d == 0 || k == 0 || !family || alpha.size() == 0) {
    auto f = next("header");
    if (f.empty()) continue;
    if (f[0] == "d" && f.size() == 2) d = static_cast<int>(number(f[1]));
    else if (f[0] == "k" && f.size() == 2) k = static_cast<int>(number(f[1]));
    else if (f[0] == "family" && f.size() == 2) {
      try {
        family = parse_family(f[1]);
      } catch (const Error& e) {
        detail::parse_fail(source, line_no, e.what());
      }
    } else if (f[0] == "alpha") {
      alpha.resize(static_cast<Eigen::Index>(f.size() - 1));
      for (std::size_t j = 1; j < f.size(); ++j) alpha[j - 1] = number(f[j]);
    }
  }
  if (d <= 0 || k <= 0) detail::parse_fail(source, line_no, "d and k must be positive");
  if (alpha.size() != k) detail::parse_fail(source, line_no, "alpha must have k entries");
  TopicModel model{Matrix(d, k), alpha, *family};
  for (int j = 0; j < k; ++j) {
    auto f = next("topic column");
    if (static_cast<int>(f.size()) != d)
      detail::parse_fail(source, line_no, "topic column needs " + std::to_string(d) + " values");
    for (int i = 0; i < d; ++i) model.a(i, j) = number(f[i]);
  }
  return model;
}

inline TopicModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open model file " + path);
  return read_model(in, path);
}

/// Indices of the `m` largest entries of each column, descending.
inline std::vector<std::vector<int>> top_words(const Matrix& a, int m) {
  std::vector<std::vector<int>> out(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    std::vector<int> idx(a.rows());
    for (int i = 0; i < a.rows(); ++i) idx[i] = i;
    const int take = std::min<int>(m, static_cast<int>(a.rows()));
    std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int x, int y) {
      return a(x, j) > a(y, j) || (a(x, j) == a(y, j) && x < y);
    });
    idx.resize(take);
    out[j] = std::move(idx);
  }
  return out;
}

/// "Topic<TAB>word word ..." lines, one per topic.
inline void write_top_words(const TopicModel& model, const std::vector<std::string>& vocab, int m,
                            std::ostream& out) {
  const auto tops = top_words(model.a, m);
  out << "Topic\tTop words in descending order of importance\n";
  for (std::size_t j = 0; j < tops.size(); ++j) {
    out << (j + 1) << '\t';
    for (std::size_t n = 0; n < tops[j].size(); ++n) {
      const int w = tops[j][n];
      out << (n ? " " : "") << (vocab.empty() ? std::to_string(w + 1) : vocab[w]);
    }
    out << '\n';
  }
}

}  // namespace nidtm
