// Generate a synthetic corpus from an inverse-Gaussian topic model, learn it
// back with the spectral method and compare against a Dirichlet fit.
#include <cstdio>

#include "nidtm/nidtm.hpp"

using namespace nidtm;

namespace {

double mean_l1(const Matrix& truth, const Matrix& est) {
  // greedy column matching is enough for a demo
  double total = 0.0;
  std::vector<bool> used(est.cols(), false);
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    Eigen::Index best = -1;
    double best_d = 1e300;
    for (Eigen::Index c = 0; c < est.cols(); ++c) {
      const double d = (truth.col(j) - est.col(c)).lpNorm<1>();
      if (!used[c] && d < best_d) best = c, best_d = d;
    }
    used[best] = true;
    total += best_d;
  }
  return total / truth.cols();
}

}  // namespace

int main() {
  const int d = 50, k = 4;
  TopicModel truth;
  truth.family = IDFamily::inverse_gaussian(0.1);
  truth.alpha = Vector::Constant(k, 0.25);
  truth.a = random_topic_matrix(d, k, 0.1, 1);

  const SynthResult data = generate(truth, {.n_docs = 20000, .doc_len = 60, .seed = 2, .exec = {4}});
  const CorpusSplit parts = split_corpus(data.corpus, 0.8, 3);

  std::printf("family\tA_l1\tperplexity\n");
  for (const IDFamily& f : {truth.family, IDFamily::gamma(1.0)}) {
    LearnConfig cfg;
    cfg.moments.exec = cfg.power.exec = {4};
    const LearnResult res = learn(parts.train, f, k, truth.alpha0(), cfg);
    const double ppl = perplexity(res.model, parts.validation, {.samples = 256, .seed = 4, .exec = {4}}).perplexity;
    std::printf("%s\t%.4f\t%.3f\n", f.spec().c_str(), mean_l1(truth.a, res.model.a), ppl);
  }
  std::printf("truth\t0\t%.3f\n",
              perplexity(truth, parts.validation, {.samples = 256, .seed = 4, .exec = {4}}).perplexity);
}
