// nidtm command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nidtm/nidtm.hpp"

namespace {

using namespace nidtm;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
};

std::string fmt(double x, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::optional<double> parse_alpha0(const std::string& text) {
  if (text == "fit") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0))
    fail(ErrorKind::InvalidInput, "alpha0 must be a positive number or 'fit', got '" + text + "'");
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) fail(ErrorKind::InvalidInput, "bad " + what + " '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorKind::InvalidInput, what + " list is empty");
  return out;
}

void log_line(const Globals& g, const std::string& text) {
  if (!g.quiet) std::cerr << text << '\n';
}

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i], "%.6g");
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string family = "dirichlet";
  int k = 5;
  int d = 100;
  long docs = 1000;
  int len = 100;
  double alpha0 = 1.0;
  std::string alpha;
  double topic_concentration = 0.1;
  std::string out;
  std::string truth;
  std::string model_out;
};

void run_generate(const GenerateArgs& a, const Globals& g) {
  TopicModel model;
  model.family = parse_family(a.family);
  model.a = random_topic_matrix(a.d, a.k, a.topic_concentration, derive_seed(g.seed, 0xa));
  if (a.alpha.empty()) {
    if (!(a.alpha0 > 0.0)) fail(ErrorKind::InvalidInput, "alpha0 must be positive");
    model.alpha = Vector::Constant(a.k, a.alpha0 / a.k);
  } else {
    const auto vals = parse_numbers(a.alpha, "alpha");
    model.alpha = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }
  SynthConfig cfg{a.docs, a.len, g.seed, Exec{g.threads}};
  const SynthResult res = generate(model, cfg);
  write_uci(res.corpus, a.out);
  write_latents(res.latents, a.truth.empty() ? a.out + ".truth.tsv" : a.truth);
  write_model(model, a.model_out.empty() ? a.out + ".model" : a.model_out);
  log_line(g, "generated " + std::to_string(res.corpus.size()) + " documents, d = " +
                  std::to_string(model.d()) + ", k = " + std::to_string(model.k()));
}

// ---------------------------------------------------------------- weights

void run_weights(const std::string& family, double alpha0) {
  const IDFamily f = parse_family(family);
  const Weights w = in_stage("weights", [&] { return compute_weights(f, alpha0); });
  std::cout << "family\talpha0\tv\tv1\tv2\tv_err\tv1_err\tv2_err\n"
            << f.spec() << '\t' << fmt(alpha0) << '\t' << fmt(w.v) << '\t' << fmt(w.v1) << '\t'
            << fmt(w.v2) << '\t' << fmt(w.v_err, "%.3g") << '\t' << fmt(w.v1_err, "%.3g") << '\t'
            << fmt(w.v2_err, "%.3g") << '\n';
}

// ---------------------------------------------------------------- learn

struct LearnArgs {
  std::string corpus;
  std::string family = "dirichlet";
  int k = 5;
  std::string alpha0 = "1";
  std::string out;
  std::string vocab;
  int top = 10;
  int restarts = 30;
  int iterations = 100;
  bool strict = false;
};

void run_learn(const LearnArgs& a, const Globals& g) {
  const Corpus corpus = in_stage("read", [&] { return read_uci(a.corpus); });
  LearnConfig cfg;
  cfg.power.restarts = a.restarts;
  cfg.power.iterations = a.iterations;
  cfg.power.seed = g.seed;
  cfg.power.exec = Exec{g.threads};
  cfg.moments.exec = Exec{g.threads};
  cfg.moments.strict = a.strict;
  const LearnResult res = learn(corpus, parse_family(a.family), a.k, parse_alpha0(a.alpha0), cfg);

  const LearnReport& r = res.report;
  log_line(g, "weights v=" + fmt(r.weights.v) + " v1=" + fmt(r.weights.v1) + " v2=" + fmt(r.weights.v2));
  log_line(g, "m2 eigenvalues: " + join(r.m2_eigenvalues) + " | next " + fmt(r.next_eigenvalue, "%.6g"));
  Vector eig(static_cast<Eigen::Index>(r.decomposition.eigenvalues.size()));
  for (Eigen::Index i = 0; i < eig.size(); ++i) eig[i] = r.decomposition.eigenvalues[i];
  log_line(g, "tensor eigenvalues: " + join(eig));
  log_line(g, "relative residual: " + fmt(r.relative_residual, "%.6g"));
  log_line(g, "alpha0: " + fmt(res.model.alpha0(), "%.6g"));
  if (r.weak_spectrum)
    log_line(g, "warning: weak spectrum; k may exceed the rank supported by the data");
  for (int c : r.degenerate_columns)
    log_line(g, "warning: recovered column " + std::to_string(c + 1) + " is degenerate");

  if (a.out.empty()) {
    write_model(res.model, std::cout);
    return;
  }
  write_model(res.model, a.out);
  std::vector<std::string> vocab = a.vocab.empty() ? std::vector<std::string>{} : read_vocab(a.vocab);
  write_top_words(res.model, vocab, a.top, std::cout);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string corpus;
  bool pmi = false;
  int samples = 512;
  int top = 10;
  std::string vocab;
};

void run_eval(const EvalArgs& a, const Globals& g) {
  const TopicModel model = in_stage("read", [&] { return read_model(a.model); });
  const Corpus corpus = in_stage("read", [&] { return read_uci(a.corpus); });
  const PerplexityResult p = in_stage("perplexity", [&] {
    return perplexity(model, corpus, PerplexityConfig{a.samples, g.seed, Exec{g.threads}});
  });
  std::cout << "metric\tvalue\n";
  std::cout << "perplexity\t" << fmt(p.perplexity) << '\n';
  std::cout << "flagged_docs\t" << p.flagged_docs.size() << '\n';
  std::optional<PmiResult> coherence;
  if (a.pmi) {
    coherence = in_stage("pmi", [&] { return pmi(model, corpus, a.top); });
    std::cout << "pmi\t" << fmt(coherence->mean) << '\n';
  }
  std::vector<std::string> vocab = a.vocab.empty() ? std::vector<std::string>{} : read_vocab(a.vocab);
  const auto tops = top_words(model.a, a.top);
  std::cout << "\ntopic\t" << (a.pmi ? "pmi\t" : "") << "top_words\n";
  for (std::size_t j = 0; j < tops.size(); ++j) {
    std::cout << (j + 1) << '\t';
    if (coherence) std::cout << fmt(coherence->per_topic[j]) << '\t';
    for (std::size_t n = 0; n < tops[j].size(); ++n)
      std::cout << (n ? " " : "") << (vocab.empty() ? std::to_string(tops[j][n] + 1) : vocab[tops[j][n]]);
    std::cout << '\n';
  }
  for (auto d : p.flagged_docs)
    log_line(g, "warning: document " + std::to_string(d + 1) + " has a word of zero probability");
}

// ---------------------------------------------------------------- tune

struct TuneArgs {
  std::string corpus;
  int k = 5;
  std::string grid = "dirichlet@1";
  double split = 0.8;
  int samples = 512;
  std::string out;
  std::string direct_weights;
};

void run_tune(const TuneArgs& a, const Globals& g) {
  const Corpus corpus = in_stage("read", [&] { return read_uci(a.corpus); });
  TuneConfig cfg;
  cfg.split = a.split;
  cfg.seed = g.seed;
  cfg.perplexity_samples = a.samples;
  cfg.learn.power.seed = g.seed;
  cfg.exec = Exec{g.threads};

  if (!a.direct_weights.empty()) {
    std::vector<Weights> grid;
    std::stringstream ss(a.direct_weights);
    std::string item;
    while (std::getline(ss, item, ';')) {
      const auto v = parse_numbers(item, "weight triple");
      if (v.size() != 3) fail(ErrorKind::InvalidInput, "weight triples need v,v1,v2");
      Weights w;
      w.v = v[0];
      w.v1 = v[1];
      w.v2 = v[2];
      grid.push_back(w);
    }
    log_line(g, "experimental: scoring weight triples by tensor residual");
    const auto rows = tune_weights_direct(corpus, a.k, grid, cfg);
    std::cout << "v\tv1\tv2\tresidual\tstatus\n";
    for (const auto& r : rows)
      std::cout << fmt(r.weights.v) << '\t' << fmt(r.weights.v1) << '\t' << fmt(r.weights.v2) << '\t'
                << fmt(r.residual) << '\t' << (r.ok ? "ok" : "failed") << '\n';
    return;
  }

  const auto space = in_stage("grid", [&] { return parse_grid(a.grid); });
  const TuneResult res = tune(corpus, a.k, space, cfg);
  write_tune_report(res.rows, std::cout);
  log_line(g, "selected " + res.rows[res.best].candidate.key());
  if (!a.out.empty()) write_model(res.model, a.out);
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string model;
  std::string corpus;
  long steps = 2000;
  long burn = 500;
  long thin = 1;
  double concentration = 50.0;
};

void run_infer(const InferArgs& a, const Globals& g) {
  const TopicModel model = in_stage("read", [&] { return read_model(a.model); });
  const Corpus corpus = in_stage("read", [&] { return read_uci(a.corpus); });
  ChainConfig cfg;
  cfg.steps = a.steps;
  cfg.burn_in = a.burn;
  cfg.thin = a.thin;
  cfg.concentration = a.concentration;
  cfg.seed = g.seed;
  const InferenceResult res =
      in_stage("infer", [&] { return infer_corpus(model, corpus, cfg, Exec{g.threads}); });
  std::cout << "doc";
  for (int j = 0; j < model.k(); ++j) std::cout << "\th" << (j + 1);
  std::cout << "\tacceptance\tflag\n";
  for (Eigen::Index n = 0; n < res.posterior_mean.rows(); ++n) {
    std::cout << (n + 1);
    for (int j = 0; j < model.k(); ++j) std::cout << '\t' << fmt(res.posterior_mean(n, j));
    std::cout << '\t' << fmt(res.acceptance[n], "%.4f") << '\t'
              << (res.flagged[n] ? "acceptance_out_of_range" : "ok") << '\n';
  }
}

// ---------------------------------------------------------------- correlate

struct CorrelateArgs {
  std::string family = "invgauss";
  std::string values = "0.01,0.03,0.1,0.3,1,3,10,30,100,300";
  std::string alpha = "0.77,0.70,0.97,0.46,0.02,0.44,0.90,0.33,0.97,0.45";
};

void run_correlate(const CorrelateArgs& a) {
  const auto values = parse_numbers(a.values, "parameter");
  const auto alpha = parse_numbers(a.alpha, "alpha");
  const Vector al = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  std::cout << "lambda_or_gamma,positive_proportion\n";
  for (double x : values) {
    const IDFamily f = parse_family(a.family + ":" + fmt(x, "%.17g"));
    const CorrelationProfile p =
        in_stage("correlate", [&] { return correlation_profile(NIDModel(f, al)); });
    std::cout << fmt(x) << ',' << fmt(p.positive_proportion) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nidtm: spectral learning for latent NID topic models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--quiet", g.quiet, "suppress diagnostics on stderr");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "synthesize a corpus from a random topic model");
  gen->add_option("--family", ga.family, "gamma:<scale>|stable:<index>|invgauss:<lambda>|dirichlet")->capture_default_str();
  gen->add_option("--k", ga.k)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--d", ga.d)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--docs", ga.docs)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--len", ga.len, "words per document (>= 3)")->capture_default_str();
  gen->add_option("--alpha0", ga.alpha0, "symmetric concentration total")->capture_default_str();
  gen->add_option("--alpha", ga.alpha, "comma-separated alpha (overrides --alpha0)");
  gen->add_option("--topic-concentration", ga.topic_concentration, "Dirichlet parameter of topic columns")->capture_default_str();
  gen->add_option("--out", ga.out, "UCI corpus path")->required();
  gen->add_option("--truth", ga.truth, "ground-truth latent TSV (default <out>.truth.tsv)");
  gen->add_option("--model-out", ga.model_out, "ground-truth model (default <out>.model)");

  std::string wfamily = "dirichlet";
  double walpha0 = 1.0;
  auto* wts = app.add_subcommand("weights", "moment-combination weights of a family");
  wts->add_option("--family", wfamily)->capture_default_str();
  wts->add_option("--alpha0", walpha0)->check(CLI::PositiveNumber)->capture_default_str();

  LearnArgs la;
  auto* lrn = app.add_subcommand("learn", "learn a topic model from a corpus");
  lrn->add_option("--corpus", la.corpus)->required();
  lrn->add_option("--family", la.family)->capture_default_str();
  lrn->add_option("--k", la.k)->check(CLI::PositiveNumber)->capture_default_str();
  lrn->add_option("--alpha0", la.alpha0, "positive number or 'fit'")->capture_default_str();
  lrn->add_option("--out", la.out, "model path (default: model to stdout)");
  lrn->add_option("--vocab", la.vocab, "vocabulary file, one word per line");
  lrn->add_option("--top", la.top, "top words per topic")->check(CLI::PositiveNumber)->capture_default_str();
  lrn->add_option("--restarts", la.restarts)->check(CLI::PositiveNumber)->capture_default_str();
  lrn->add_option("--iterations", la.iterations)->check(CLI::PositiveNumber)->capture_default_str();
  lrn->add_flag("--strict", la.strict, "reject documents shorter than 3 words");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "held-out perplexity and PMI coherence");
  evl->add_option("--model", ea.model)->required();
  evl->add_option("--corpus", ea.corpus)->required();
  evl->add_flag("--pmi", ea.pmi, "also report PMI coherence");
  evl->add_option("--samples", ea.samples, "prior draws per document")->check(CLI::PositiveNumber)->capture_default_str();
  evl->add_option("--top", ea.top)->check(CLI::Range(2, 1000000))->capture_default_str();
  evl->add_option("--vocab", ea.vocab);

  TuneArgs ta;
  auto* tun = app.add_subcommand("tune", "select family and parameters by validation perplexity");
  tun->add_option("--corpus", ta.corpus)->required();
  tun->add_option("--k", ta.k)->check(CLI::PositiveNumber)->capture_default_str();
  tun->add_option("--grid", ta.grid, "e.g. 'gamma:1@1;invgauss:1,4,16@0.5,1'")->capture_default_str();
  tun->add_option("--split", ta.split, "training fraction")->capture_default_str();
  tun->add_option("--samples", ta.samples)->check(CLI::PositiveNumber)->capture_default_str();
  tun->add_option("--out", ta.out, "write the selected model");
  tun->add_option("--direct-weights", ta.direct_weights,
                  "experimental: 'v,v1,v2;...' scored by tensor residual");

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "posterior topic proportions by MCMC");
  inf->add_option("--model", ia.model)->required();
  inf->add_option("--corpus", ia.corpus)->required();
  inf->add_option("--steps", ia.steps)->check(CLI::PositiveNumber)->capture_default_str();
  inf->add_option("--burn", ia.burn)->check(CLI::NonNegativeNumber)->capture_default_str();
  inf->add_option("--thin", ia.thin)->check(CLI::PositiveNumber)->capture_default_str();
  inf->add_option("--concentration", ia.concentration, "Dirichlet proposal concentration")->capture_default_str();

  CorrelateArgs ca;
  auto* cor = app.add_subcommand("correlate", "share of positively correlated proportion pairs");
  cor->add_option("--family", ca.family, "gamma|invgauss|stable")->capture_default_str();
  cor->add_option("--values", ca.values, "comma-separated parameter sweep")->capture_default_str();
  cor->add_option("--alpha", ca.alpha, "comma-separated alpha")->capture_default_str();

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) run_generate(ga, g);
    else if (*wts) run_weights(wfamily, walpha0);
    else if (*lrn) run_learn(la, g);
    else if (*evl) run_eval(ea, g);
    else if (*tun) run_tune(ta, g);
    else if (*inf) run_infer(ia, g);
    else if (*cor) run_correlate(ca);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    // errors raised outside a named stage are attributed to the subcommand
    std::cerr << "error: " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
