// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (no arguments runs all nine)

#include <boost/math/distributions/beta.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include "support.hpp"

using namespace nidtm;
using namespace nidtm::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
};

std::string num(double x, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Vector kFig3Alpha = (Vector(10) << 0.77, 0.70, 0.97, 0.46, 0.02, 0.44, 0.90, 0.33, 0.97, 0.45)
                              .finished();

// 1. closed-form weight agreement
Outcome closed_form_weights() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (double a0 : {0.5, 1.0, 2.0, 5.0}) {
    const Weights w = compute_weights(IDFamily::gamma(1.0), a0);
    const double v1 = -a0 / (a0 + 2.0), v2 = 2.0 * a0 * a0 / ((a0 + 2.0) * (a0 + 1.0));
    o.check(std::abs(w.v1 - v1) < 1e-6 && std::abs(w.v2 - v2) < 1e-6,
            "gamma alpha0=" + num(a0) + ": v1=" + num(w.v1, "%.9f") + " (want " + num(v1, "%.9f") +
                "), v2=" + num(w.v2, "%.9f") + " (want " + num(v2, "%.9f") + ")");
  }
  for (double a0 : {0.5, 1.0, 2.0}) {
    const Weights w = compute_weights(IDFamily::stable(0.5), a0);
    o.check(std::abs(w.v1 + 0.25) < 1e-6, "stable 1/2 alpha0=" + num(a0) + ": v1=" +
                                              num(w.v1, "%.9f") + " (want -0.25)");
    o.check(std::abs(w.v2 + 0.625) < 1e-6, "stable 1/2 alpha0=" + num(a0) + ": v2=" +
                                               num(w.v2, "%.9f") + " (want -0.625)");
  }
  const double t = seconds_since(t0);
  o.check(t < 5.0, "runtime " + num(t) + " s (limit 5 s)");
  return o;
}

// 2. sign resolution of the second-order weight
Outcome sign_resolution() {
  Outcome o;
  const Vector alpha = (Vector(3) << 2, 2, 4).finished();
  for (const IDFamily& f : {IDFamily::gamma(1.0), IDFamily::inverse_gaussian(1.0), IDFamily::stable(0.5)}) {
    const HMoments hm = exact_h_moments(NIDModel(f, alpha));
    const Weights w = compute_weights(f, alpha.sum());
    const double good = max_off_diagonal(centered_h_m2(hm, w));
    const double bad = max_off_diagonal(centered_h_m2(hm, typeset_weights(f, alpha.sum())));
    o.check(good < 1e-6, f.spec() + ": derived sign max off-diagonal " + num(good) + " (< 1e-6)");
    o.check(bad > 1e-2, f.spec() + ": printed sign max off-diagonal " + num(bad) + " (> 1e-2)");
  }
  return o;
}

// 3. third-order diagonalization
Outcome third_order_diagonal() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Vector shape = (Vector(3) << 0.25, 0.25, 0.5).finished();
  std::vector<std::pair<IDFamily, double>> cases = {
      {IDFamily::gamma(1.0), 1.0},           {IDFamily::gamma(1.0), 2.0},
      {IDFamily::inverse_gaussian(0.5), 1.0}, {IDFamily::inverse_gaussian(4.0), 1.0},
      {IDFamily::stable(0.4), 1.0},          {IDFamily::stable(0.75), 1.0}};
  for (const auto& [f, a0] : cases) {
    const HMoments hm = exact_h_moments(NIDModel(f, shape * a0));
    const Tensor3 t = centered_h_m3(hm, compute_weights(f, a0));
    const double off = t.max_abs_off_diagonal();
    o.check(off < 1e-5, f.spec() + " alpha0=" + num(a0) + ": max off-diagonal " + num(off) + " (< 1e-5)");
  }
  const double t = seconds_since(t0);
  o.check(t < 60.0, "runtime " + num(t) + " s (limit 60 s)");
  return o;
}

// 4. quadrature moments against Monte Carlo
Outcome moment_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Vector alpha = (Vector(3) << 2, 2, 4).finished();
  const long n = 1000000;
  const auto indices = multi_indices(3, 3);
  for (const IDFamily& f : {IDFamily::gamma(1.0), IDFamily::inverse_gaussian(1.0), IDFamily::stable(0.5)}) {
    const NIDModel model(f, alpha);
    std::vector<double> sum(indices.size(), 0.0), sq(indices.size(), 0.0);
    Rng rng = make_rng(20241014, 4);
    for (long s = 0; s < n; ++s) {
      const Vector h = sample_proportions(f, alpha, rng);
      for (std::size_t m = 0; m < indices.size(); ++m) {
        double x = 1.0;
        for (int i = 0; i < 3; ++i) x *= std::pow(h[i], indices[m][i]);
        sum[m] += x;
        sq[m] += x * x;
      }
    }
    double worst = 0.0;
    std::string worst_idx;
    for (std::size_t m = 0; m < indices.size(); ++m) {
      const double mean = sum[m] / n;
      const double se = std::sqrt(std::max(0.0, sq[m] / n - mean * mean) / n);
      const double z = std::abs(moment(model, indices[m]) - mean) / se;
      if (z > worst) {
        worst = z;
        worst_idx = std::to_string(indices[m][0]) + std::to_string(indices[m][1]) +
                    std::to_string(indices[m][2]);
      }
    }
    o.check(worst < 3.0, f.spec() + ": worst |quad - MC| / SE = " + num(worst) + " at r=" +
                             worst_idx + " over " + std::to_string(indices.size()) + " indices");
  }
  const double t = seconds_since(t0);
  o.check(t < 300.0, "runtime " + num(t) + " s (limit 300 s)");
  return o;
}

struct RecoveryRun {
  double a_error = 0.0;
  double alpha_error = 0.0;
  double ppl_same = 0.0;  // learned with the generating family
  double ppl_dirichlet = 0.0;
};

RecoveryRun recovery_run(const IDFamily& family, std::uint64_t seed, bool held_out) {
  const TopicModel truth = make_model(100, 5, family, Vector::Constant(5, 0.2), seed);
  const SynthResult data = generate(truth, SynthConfig{50000, 100, seed, Exec{4}});
  LearnConfig cfg;
  cfg.power.seed = seed;
  cfg.power.exec = Exec{4};
  cfg.moments.exec = Exec{4};

  RecoveryRun out;
  if (!held_out) {
    const LearnResult lr = learn(data.corpus, family, 5, 1.0, cfg);
    const Matching m = match_columns(truth.a, lr.model.a);
    out.a_error = m.mean_l1;
    out.alpha_error = (permute(lr.model.alpha, m.perm) - truth.alpha).lpNorm<1>() / truth.alpha.lpNorm<1>();
    return out;
  }
  const CorpusSplit parts = split_corpus(data.corpus, 0.8, seed);
  const PerplexityConfig pc{512, seed, Exec{4}};
  out.ppl_same = perplexity(learn(parts.train, family, 5, 1.0, cfg).model, parts.validation, pc).perplexity;
  out.ppl_dirichlet =
      perplexity(learn(parts.train, IDFamily::gamma(1.0), 5, 1.0, cfg).model, parts.validation, pc).perplexity;
  return out;
}

const std::vector<std::uint64_t> kRecoverySeeds = {11, 22, 33};

// 5. synthetic recovery
Outcome synthetic_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> dir_a, dir_alpha, ig_a;
  for (auto s : kRecoverySeeds) {
    const RecoveryRun d = recovery_run(IDFamily::gamma(1.0), s, false);
    const RecoveryRun g = recovery_run(IDFamily::inverse_gaussian(4.0), s, false);
    dir_a.push_back(d.a_error);
    dir_alpha.push_back(d.alpha_error);
    ig_a.push_back(g.a_error);
    o.notes.push_back("       seed " + std::to_string(s) + ": dirichlet A " + num(d.a_error) + ", alpha " +
                      num(d.alpha_error) + "; invgauss A " + num(g.a_error));
  }
  o.check(median(dir_a) < 0.15, "dirichlet median A l1 error " + num(median(dir_a)) + " (< 0.15)");
  o.check(median(dir_alpha) < 0.2, "dirichlet median alpha relative l1 error " + num(median(dir_alpha)) + " (< 0.2)");
  o.check(median(ig_a) < 0.2, "invgauss:4 median A l1 error " + num(median(ig_a)) + " (< 0.2)");
  const double t = seconds_since(t0);
  o.check(t < 600.0, "runtime " + num(t) + " s (limit 600 s)");
  return o;
}

// 6. held-out perplexity direction
Outcome perplexity_direction() {
  Outcome o;
  std::vector<double> same, dir, diff;
  for (auto s : kRecoverySeeds) {
    const RecoveryRun r = recovery_run(IDFamily::inverse_gaussian(4.0), s, true);
    same.push_back(r.ppl_same);
    dir.push_back(r.ppl_dirichlet);
    diff.push_back(r.ppl_same - r.ppl_dirichlet);
    o.notes.push_back("       seed " + std::to_string(s) + ": invgauss " + num(r.ppl_same, "%.6g") +
                      ", dirichlet " + num(r.ppl_dirichlet, "%.6g"));
  }
  o.check(median(diff) <= 0.0, "median paired difference invgauss - dirichlet = " + num(median(diff)) +
                                   " (<= 0); medians " + num(median(same), "%.6g") + " vs " +
                                   num(median(dir), "%.6g"));
  return o;
}

// 7. correlation sign
Outcome correlation_sign() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> sweep = {0.01, 0.03, 0.1, 0.3, 1, 3, 10, 30, 100, 300};
  double gamma_max = 0.0, ig_max = 0.0;
  for (double lam : sweep) {
    gamma_max = std::max(gamma_max, correlation_profile(NIDModel(IDFamily::gamma(lam), kFig3Alpha)).positive_proportion);
    ig_max = std::max(ig_max, correlation_profile(NIDModel(IDFamily::inverse_gaussian(lam), kFig3Alpha)).positive_proportion);
  }
  o.check(gamma_max == 0.0, "gamma lambda sweep (10 points): max positive proportion " + num(gamma_max) + " (= 0)");
  o.check(ig_max > 0.0, "invgauss lambda sweep (10 points): max positive proportion " + num(ig_max) + " (> 0)");
  const double t = seconds_since(t0);
  o.check(t < 120.0, "runtime " + num(t) + " s (limit 120 s)");
  return o;
}

// 8. MCMC against the conjugate posterior
Outcome mcmc_conjugacy() {
  Outcome o;
  TopicModel model;
  model.family = IDFamily::gamma(1.0);
  model.alpha = (Vector(2) << 0.8, 1.5).finished();
  model.a = Matrix::Zero(4, 2);
  model.a.col(0) << 0.5, 0.5, 0, 0;
  model.a.col(1) << 0, 0, 0.3, 0.7;
  Document doc;
  doc.entries = {{0, 17}, {1, 13}, {2, 8}, {3, 12}};  // 30 words from topic 1, 20 from topic 2

  ChainConfig cfg;
  cfg.steps = 100000;
  cfg.burn_in = 1000;
  cfg.seed = 8;
  const ChainResult r = run_chain(doc, model, cfg);
  std::vector<double> h1;
  for (const auto& s : r.samples) h1.push_back(s.h[0]);
  const boost::math::beta_distribution<double> post(0.8 + 30, 1.5 + 20);
  const double exact = boost::math::mean(post);
  const double ks = ks_distance(h1, [&](double x) { return boost::math::cdf(post, x); });
  o.check(std::abs(r.posterior_mean[0] - exact) < 0.05,
          "posterior mean h1 " + num(r.posterior_mean[0], "%.4f") + " vs analytic " + num(exact, "%.4f") + " (< 0.05)");
  o.check(ks < 0.05, "KS distance of h1 marginal " + num(ks, "%.4f") + " (< 0.05), acceptance " +
                         num(r.acceptance_rate, "%.3f"));
  return o;
}

// 9. CLI determinism
Outcome cli_determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("nidtm_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = NIDTM_CLI_PATH;
  const std::string d = dir.string() + "/";
  auto run = [&](const std::string& args, const std::string& out) {
    const std::string cmd = cli + " " + args + " > " + d + out + " 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
  };
  const bool made = run("generate --family invgauss:4 --k 3 --d 30 --docs 400 --len 30 --seed 5 --out " + d + "c.uci", "gen.out");
  o.check(made, "generate succeeded");
  if (!made) return o;

  struct Case {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases = {
      {"generate", "generate --family invgauss:4 --k 3 --d 30 --docs 400 --len 30 --seed 5 --threads 3 --out " + d + "g{rep}.uci",
       {"g{rep}.uci", "g{rep}.uci.truth.tsv", "g{rep}.uci.model"}},
      {"weights", "weights --family invgauss:2 --alpha0 0.7", {}},
      {"learn", "learn --corpus " + d + "c.uci --family invgauss:4 --k 3 --alpha0 fit --seed 5 --threads 3 --out " + d + "m{rep}.model",
       {"m{rep}.model"}},
      {"eval", "eval --model " + d + "c.uci.model --corpus " + d + "c.uci --pmi --samples 64 --seed 5 --threads 3", {}},
      {"tune", "tune --corpus " + d + "c.uci --k 3 --grid 'gamma:1@1;invgauss:1,4@1' --samples 32 --seed 5 --threads 3", {}},
      {"infer", "infer --model " + d + "c.uci.model --corpus " + d + "c.uci --steps 200 --burn 50 --seed 5 --threads 3", {}},
      {"correlate", "correlate --family invgauss --values 0.5,4 --alpha 0.5,1,2", {}},
  };
  for (const auto& c : cases) {
    std::vector<std::string> outputs[2];
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep) {
      auto sub = [&](std::string s) {
        for (auto p = s.find("{rep}"); p != std::string::npos; p = s.find("{rep}")) s.replace(p, 5, std::to_string(rep));
        return s;
      };
      ok = run(sub(c.args), c.name + std::to_string(rep) + ".out") && ok;
      outputs[rep].push_back(slurp(d + c.name + std::to_string(rep) + ".out"));
      for (const auto& f : c.files) outputs[rep].push_back(slurp(d + sub(f)));
    }
    std::size_t bytes = 0;
    for (const auto& out : outputs[0]) bytes += out.size();
    const bool same = ok && outputs[0] == outputs[1] && bytes > 0;
    o.check(same, c.name + ": two runs byte-identical" + (ok ? "" : " (command failed)"));
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"closed-form weight agreement", closed_form_weights}},
      {2, {"sign resolution", sign_resolution}},
      {3, {"third-order diagonalization", third_order_diagonal}},
      {4, {"moment oracle", moment_oracle}},
      {5, {"synthetic recovery", synthetic_recovery}},
      {6, {"perplexity direction", perplexity_direction}},
      {7, {"correlation sign", correlation_sign}},
      {8, {"MCMC conjugacy oracle", mcmc_conjugacy}},
      {9, {"CLI determinism", cli_determinism}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [id, _] : criteria) selected.push_back(id);

  bool all = true;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << it->second.first << '\n';
    for (const auto& n : o.notes) std::cout << n << '\n';
    std::cout.flush();
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
