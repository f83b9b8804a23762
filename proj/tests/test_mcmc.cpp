#include <gtest/gtest.h>

#include "support.hpp"

using namespace nidtm;
using namespace nidtm::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// topic j owns words [j * per, (j + 1) * per)
TopicModel disjoint_model(int k, int per, const IDFamily& f, const Vector& alpha) {
  TopicModel m{Matrix::Zero(k * per, k), alpha, f};
  for (int j = 0; j < k; ++j) m.a.col(j).segment(j * per, per).setConstant(1.0 / per);
  return m;
}

Document doc_with_counts(const std::vector<int>& counts, int per) {
  std::vector<int> t;
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (int c = 0; c < counts[j]; ++c) t.push_back(static_cast<int>(j) * per + c % per);
  return Document::from_tokens(t);
}

}  // namespace

TEST(LogPosterior, GammaDifferencesMatchConjugateDirichlet) {
  const TopicModel m = disjoint_model(3, 2, IDFamily::gamma(1.0), vec({0.5, 1.0, 2.0}));
  const Document doc = doc_with_counts({3, 0, 5}, 2);
  std::vector<int> zeta;
  for (int w : doc.tokens()) zeta.push_back(w / 2);
  const Vector post = m.alpha + vec({3, 0, 5});
  const Vector h1 = vec({0.2, 0.3, 0.5}), h2 = vec({0.6, 0.1, 0.3});
  const double got = log_posterior(SimplexPoint(h1), zeta, doc, m) - log_posterior(SimplexPoint(h2), zeta, doc, m);
  EXPECT_NEAR(got, dirichlet_log_pdf(h1, post) - dirichlet_log_pdf(h2, post), 1e-12);
}

TEST(LogPosterior, UniformTopicsGiveConstantWordTerm) {
  const int d = 8;
  TopicModel m{Matrix::Constant(d, 2, 1.0 / d), vec({1.0, 1.0}), IDFamily::gamma(1.0)};
  const Document doc = Document::from_tokens({0, 3, 3, 7, 5});
  const std::vector<int> zeta = {1, 0, 1, 1, 0};
  const Vector h = vec({0.4, 0.6});
  PriorDensity prior(m);
  const double rest = prior.log(h) + 2 * std::log(0.4) + 3 * std::log(0.6);
  EXPECT_NEAR(log_posterior(h, zeta, doc, m, prior) - rest, 5 * std::log(1.0 / d), 1e-12);
}

TEST(LogPosterior, Errors) {
  const TopicModel m = disjoint_model(2, 2, IDFamily::gamma(1.0), vec({1, 1}));
  const Document doc = Document::from_tokens({0, 2});
  PriorDensity prior(m);
  EXPECT_THROW(log_posterior(vec({0.5, 0.5}), {0}, doc, m, prior), Error);
  EXPECT_THROW(log_posterior(vec({0.5, 0.5}), {0, 2}, doc, m, prior), Error);
  EXPECT_THROW(log_posterior(vec({1.0, 0.0}), {0, 1}, doc, m, prior), Error);
}

TEST(TopicCounts, Bookkeeping) {
  EXPECT_EQ(topic_counts({2, 0, 2, 2}, 3), vec({1, 0, 3}));
  EXPECT_EQ(topic_counts({}, 2), vec({0, 0}));
  EXPECT_THROW(topic_counts({3}, 3), Error);
}

TEST(Hastings, SymmetricProposalReducesToTargetRatio) {
  EXPECT_DOUBLE_EQ(hastings_log_ratio(-3.0, -5.0, -1.25, -1.25), 2.0);
  EXPECT_DOUBLE_EQ(hastings_log_ratio(-3.0, -5.0, -1.0, -4.0), -1.0);
}

TEST(PriorDensity, CachesQuantizedPoints) {
  const TopicModel m = disjoint_model(3, 1, IDFamily::inverse_gaussian(1.0), vec({1, 1, 1}));
  PriorDensity prior(m);
  const Vector h = vec({0.2, 0.3, 0.5});
  const double a = prior.log(h);
  EXPECT_EQ(prior.cache_size(), 1u);
  EXPECT_EQ(prior.log(h + vec({1e-8, -1e-8, 0.0})), a);
  EXPECT_EQ(prior.cache_size(), 1u);
  EXPECT_NEAR(a, log_density(prior.model(), SimplexPoint(h)), 1e-12);
  prior.log(vec({0.25, 0.25, 0.5}));
  EXPECT_EQ(prior.cache_size(), 2u);
}

TEST(PriorDensity, RejectsFamiliesWithoutDensity) {
  const TopicModel m = disjoint_model(2, 1, IDFamily::stable(0.3), vec({1, 1}));
  EXPECT_THROW(PriorDensity{m}, Error);
  EXPECT_NO_THROW(PriorDensity{disjoint_model(2, 1, IDFamily::stable(0.5), vec({1, 1}))});
}

TEST(RunChain, EmptyDocumentReturnsPriorMean) {
  const TopicModel m = disjoint_model(2, 2, IDFamily::gamma(1.0), vec({1.0, 2.0}));
  ChainConfig cfg;
  cfg.steps = 40000;
  cfg.burn_in = 1000;
  cfg.concentration = 5.0;
  cfg.seed = 1;
  cfg.keep_samples = false;
  const ChainResult r = run_chain(Document{}, m, cfg);
  EXPECT_NEAR(r.posterior_mean[0], 1.0 / 3.0, 0.02);
  EXPECT_FALSE(r.acceptance_flag);
}

TEST(RunChain, DisjointTopicsRecoverConjugatePosteriorMean) {
  const TopicModel m = disjoint_model(3, 2, IDFamily::gamma(1.0), vec({0.5, 1.0, 1.5}));
  const Document doc = doc_with_counts({4, 1, 7}, 2);
  ChainConfig cfg;
  cfg.steps = 30000;
  cfg.burn_in = 1000;
  cfg.seed = 2;
  const ChainResult r = run_chain(doc, m, cfg);
  const Vector post = m.alpha + vec({4, 1, 7});
  EXPECT_LT((r.posterior_mean - post / post.sum()).cwiseAbs().maxCoeff(), 0.01);
  EXPECT_EQ(r.kept, 29000);
  ASSERT_EQ(r.samples.size(), 29000u);
  // zeta is forced by the word
  EXPECT_EQ(r.samples.back().zeta, (std::vector<int>{0, 0, 0, 0, 1, 2, 2, 2, 2, 2, 2, 2}));
  EXPECT_NEAR(r.samples.back().log_post,
              log_posterior(SimplexPoint(r.samples.back().h), r.samples.back().zeta, doc, m), 1e-9);
}

TEST(RunChain, ThinningAndDeterminism) {
  const TopicModel m = disjoint_model(2, 3, IDFamily::inverse_gaussian(1.0), vec({1.0, 1.0}));
  const Document doc = doc_with_counts({3, 2}, 3);
  ChainConfig cfg;
  cfg.steps = 600;
  cfg.burn_in = 100;
  cfg.thin = 7;
  cfg.seed = 3;
  const ChainResult a = run_chain(doc, m, cfg), b = run_chain(doc, m, cfg);
  EXPECT_EQ(a.kept, 500 / 7);
  EXPECT_EQ(a.posterior_mean, b.posterior_mean);
  EXPECT_EQ(a.samples.front().step, 107);
}

TEST(RunChain, HugeConcentrationIsFlagged) {
  const TopicModel m = disjoint_model(2, 2, IDFamily::gamma(1.0), vec({1.0, 1.0}));
  ChainConfig cfg;
  cfg.steps = 3000;
  cfg.burn_in = 100;
  cfg.concentration = 1e8;
  cfg.seed = 4;
  const ChainResult r = run_chain(doc_with_counts({2, 3}, 2), m, cfg);
  EXPECT_GT(r.acceptance_rate, kAcceptanceHigh);
  EXPECT_TRUE(r.acceptance_flag);
}

TEST(RunChain, ConfigAndInputErrors) {
  const TopicModel m = disjoint_model(2, 2, IDFamily::gamma(1.0), vec({1.0, 1.0}));
  const Document doc = Document::from_tokens({0, 1});
  EXPECT_THROW(run_chain(doc, m, {.steps = 10, .burn_in = 10}), Error);
  EXPECT_THROW(run_chain(doc, m, {.thin = 0}), Error);
  EXPECT_THROW(run_chain(doc, m, {.concentration = 0.0}), Error);
  EXPECT_THROW(run_chain(Document::from_tokens({9}), m, {}), Error);
  TopicModel holes = m;
  holes.a = Matrix::Zero(5, 2);
  holes.a.col(0).head(2).setConstant(0.5);
  holes.a.col(1).segment(2, 2).setConstant(0.5);
  EXPECT_THROW(run_chain(Document::from_tokens({4}), holes, {}), Error);
  const TopicModel single{Matrix::Constant(3, 1, 1.0 / 3), vec({1.0}), IDFamily::gamma(1.0)};
  EXPECT_THROW(run_chain(doc, single, {}), Error);
}

TEST(InferCorpus, ThreadInvariantRows) {
  const TopicModel m = disjoint_model(3, 2, IDFamily::gamma(1.0), vec({0.5, 0.5, 0.5}));
  Corpus c;
  c.d = 6;
  c.docs = {doc_with_counts({3, 0, 1}, 2), doc_with_counts({0, 5, 5}, 2), Document{}};
  ChainConfig cfg;
  cfg.steps = 2000;
  cfg.burn_in = 200;
  cfg.seed = 5;
  const InferenceResult a = infer_corpus(m, c, cfg), b = infer_corpus(m, c, cfg, Exec{3});
  EXPECT_EQ(a.posterior_mean, b.posterior_mean);
  EXPECT_EQ(a.posterior_mean.rows(), 3);
  EXPECT_NEAR(a.posterior_mean.row(1).sum(), 1.0, 1e-12);
  Corpus wrong = c;
  wrong.d = 7;
  EXPECT_THROW(infer_corpus(m, wrong, cfg), Error);
}
