#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nidtm/corpus.hpp"
#include "nidtm/error.hpp"
#include "nidtm/evaluation.hpp"
#include "nidtm/levy_exponent.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/spectral.hpp"

namespace nidtm {

/// One point of the search space. An empty alpha0 means "fit".
struct Candidate {
  IDFamily family = IDFamily::gamma(1.0);
  std::optional<double> alpha0 = 1.0;

  std::string key() const {
    if (!alpha0) return family.spec() + "@fit";
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, *alpha0).ptr;
    return family.spec() + "@" + std::string(buf, end);
  }
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    std::string item(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_positive(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !(v > 0.0) || !std::isfinite(v))
    fail(ErrorKind::Parse, "grid: bad " + what + " '" + s + "'");
  return v;
}

}  // namespace detail

/// Grid syntax: entries separated by ';', each "family[:p1,p2,...][@a1,a2,...]".
/// The family parameters and alpha0 values form a product; alpha0 defaults to
/// 1 and may be "fit". Example: "gamma:1@1;invgauss:1,4,16@0.5,1,fit".
inline std::vector<Candidate> parse_grid(std::string_view spec) {
  std::vector<Candidate> out;
  for (const std::string& entry : detail::split_list(spec, ';')) {
    if (entry.empty()) continue;
    const std::size_t at = entry.find('@');
    const std::string fam = entry.substr(0, at);
    std::vector<std::optional<double>> alphas;
    if (at == std::string::npos) {
      alphas.push_back(1.0);
    } else {
      for (const std::string& a : detail::split_list(std::string_view(entry).substr(at + 1), ','))
        alphas.push_back(a == "fit" ? std::nullopt
                                    : std::optional<double>(detail::parse_positive(a, "alpha0")));
    }
    const std::size_t colon = fam.find(':');
    std::vector<IDFamily> families;
    if (colon == std::string::npos) {
      families.push_back(parse_family(fam));
    } else {
      const std::string name = fam.substr(0, colon);
      for (const std::string& p : detail::split_list(std::string_view(fam).substr(colon + 1), ','))
        families.push_back(parse_family(name + ":" + p));
    }
    for (const auto& f : families)
      for (const auto& a : alphas) out.push_back({f, a});
  }
  if (out.empty()) fail(ErrorKind::Parse, "grid: search space is empty");
  return out;
}

struct CorpusSplit {
  Corpus train;
  Corpus validation;
};

/// Seeded shuffle, then the first round(fraction * n) documents train.
inline CorpusSplit split_corpus(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::InvalidInput, "split fraction must lie in (0, 1)");
  const std::size_t n = corpus.docs.size();
  if (n < 2) fail(ErrorKind::InvalidInput, "need at least 2 documents to split");
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0x5b17);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> valid(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {corpus.subset(train), corpus.subset(valid)};
}

struct TuneConfig {
  double split = 0.8;
  std::uint64_t seed = 0;
  int perplexity_samples = 512;
  LearnConfig learn;
  Exec exec;
};

struct TuneRow {
  Candidate candidate;
  bool ok = false;
  std::string error;
  Weights weights;
  double alpha0 = std::numeric_limits<double>::quiet_NaN();
  double perplexity = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
};

struct TuneResult {
  TopicModel model;
  std::vector<TuneRow> rows;  // search-space order
  std::size_t best = 0;
  /// Seed of the validation perplexity estimate, shared by all candidates.
  std::uint64_t perplexity_seed = 0;
};

inline std::uint64_t tune_perplexity_seed(std::uint64_t seed) { return derive_seed(seed, 0x7e57); }

namespace detail {

/// Threads go to the grid when there is more than one candidate, otherwise
/// inside the single candidate. Results do not depend on the thread count.
inline std::pair<Exec, Exec> share_threads(std::size_t items, const Exec& exec) {
  if (items > 1) return {exec, Exec{1}};
  return {Exec{1}, exec};
}

[[noreturn]] inline void fail_all(const std::vector<TuneRow>& rows, ErrorKind kind) {
  std::string msg = "all " + std::to_string(rows.size()) + " candidates failed:";
  for (const auto& r : rows) msg += "\n  " + r.candidate.key() + ": " + r.error;
  fail(kind, msg);
}

}  // namespace detail

/// Learns every candidate on the training part and keeps the one with the
/// lowest validation perplexity; ties go to the earlier candidate.
inline TuneResult tune(const Corpus& corpus, int k, const std::vector<Candidate>& space,
                       const TuneConfig& cfg = {}) {
  if (space.empty()) fail(ErrorKind::InvalidInput, "tune: search space is empty");
  const CorpusSplit parts = split_corpus(corpus, cfg.split, cfg.seed);
  if (k < 1 || k > corpus.d)
    fail(ErrorKind::InvalidInput, "tune: k must be in 1..d, got " + std::to_string(k));
  const MomentSet ms = in_stage("moments", [&] {
    AccumulateOptions opt = cfg.learn.moments;
    opt.exec = cfg.exec;
    return accumulate(parts.train, opt);
  });
  const auto [outer, inner] = detail::share_threads(space.size(), cfg.exec);

  TuneResult result;
  result.perplexity_seed = tune_perplexity_seed(cfg.seed);
  result.rows.resize(space.size());
  std::vector<std::optional<TopicModel>> models(space.size());
  std::vector<ErrorKind> kinds(space.size(), ErrorKind::InvalidInput);

  parallel_for(space.size(), outer, [&](std::size_t c) {
    TuneRow& row = result.rows[c];
    row.candidate = space[c];
    try {
      LearnConfig lc = cfg.learn;
      lc.power.exec = inner;
      LearnResult lr = learn_from_moments(ms, space[c].family, k, space[c].alpha0, lc);
      PerplexityConfig pc{cfg.perplexity_samples, result.perplexity_seed, inner};
      row.perplexity = in_stage("evaluate", [&] {
        return perplexity(lr.model, parts.validation, pc).perplexity;
      });
      row.weights = lr.report.weights;
      row.alpha0 = lr.model.alpha0();
      row.residual = lr.report.relative_residual;
      row.ok = std::isfinite(row.perplexity);
      if (!row.ok) row.error = "non-finite validation perplexity";
      models[c] = std::move(lr.model);
    } catch (const Error& e) {
      row.error = e.what();
      kinds[c] = e.kind();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < space.size(); ++c)
    if (result.rows[c].ok && (!best || result.rows[c].perplexity < result.rows[*best].perplexity))
      best = c;
  if (!best) detail::fail_all(result.rows, kinds.front());
  result.best = *best;
  result.model = std::move(*models[*best]);
  return result;
}

/// Experimental: scores fixed weight triples directly by the relative
/// residual of the deflated whitened tensor on the training part. The triples
/// need not correspond to any NID law.
inline std::vector<TuneRow> tune_weights_direct(const Corpus& corpus, int k,
                                                const std::vector<Weights>& grid,
                                                const TuneConfig& cfg = {}) {
  if (grid.empty()) fail(ErrorKind::InvalidInput, "tune: weight grid is empty");
  const CorpusSplit parts = split_corpus(corpus, cfg.split, cfg.seed);
  const MomentSet ms = in_stage("moments", [&] {
    AccumulateOptions opt = cfg.learn.moments;
    opt.exec = cfg.exec;
    return accumulate(parts.train, opt);
  });
  const auto [outer, inner] = detail::share_threads(grid.size(), cfg.exec);
  std::vector<TuneRow> rows(grid.size());
  parallel_for(grid.size(), outer, [&](std::size_t c) {
    TuneRow& row = rows[c];
    row.weights = grid[c];
    try {
      LearnConfig lc = cfg.learn;
      lc.power.exec = inner;
      lc.weights_override = grid[c];
      const LearnResult lr = learn_from_moments(ms, row.candidate.family, k, 1.0, lc);
      row.alpha0 = 1.0;
      row.residual = lr.report.relative_residual;
      row.ok = std::isfinite(row.residual);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

inline void write_tune_report(const std::vector<TuneRow>& rows, std::ostream& out) {
  char buf[256];
  out << "family\tparams\talpha0\tv\tv1\tv2\tperplexity\tresidual\tstatus\n";
  for (const auto& r : rows) {
    const std::string spec = r.candidate.family.spec();
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string params = colon == std::string::npos ? "-" : spec.substr(colon + 1);
    std::snprintf(buf, sizeof buf, "%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g", r.alpha0,
                  r.weights.v, r.weights.v1, r.weights.v2, r.perplexity, r.residual);
    std::string status = r.ok ? "ok" : "failed: " + r.error;
    std::replace(status.begin(), status.end(), '\n', ' ');
    std::replace(status.begin(), status.end(), '\t', ' ');
    out << name << '\t' << params << '\t' << buf << '\t' << status << '\n';
  }
}

}  // namespace nidtm
