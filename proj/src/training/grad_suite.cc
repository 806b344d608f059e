#include "ecg/training/grad_suite.h"

#include <cmath>
#include <random>

#include "ecg/data/synthetic.h"
#include "ecg/lm/prompts.h"
#include "ecg/numerics/ops.h"
#include "ecg/projections/projection.h"
#include "ecg/retrieval/maxsim.h"
#include "ecg/training/losses.h"
#include "ecg/training/rag.h"
#include "ecg/training/ssl.h"

namespace ecg {
namespace {

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed + 101);
  std::vector<GradSuiteEntry> out;
  auto check = [&](const std::string& name, const std::function<Var(Graph&)>& fn, std::vector<Parameter*> params,
                   double step = 1e-5) { out.push_back({name, grad_check(fn, params, step, tolerance)}); };

  {
    Parameter logits("logits", uniform(Shape{3, 7}, rng));
    const std::vector<TokenId> targets{6, 0, 3};
    check("lm_loss", [&](Graph& g) { return lm_loss(g.param(logits), targets); }, {&logits});
  }
  {
    Parameter q("queries", uniform(Shape{4, 8}, rng));
    Parameter d("docs", uniform(Shape{4, 8}, rng));
    Parameter log_tau("log_tau", Tensor::scalar(std::log(0.5)));
    const std::vector<std::size_t> rows{2, 2};
    const std::vector<std::size_t> pos{0, 1};
    check(
        "infonce_in_batch",
        [&](Graph& g) { return infonce(maxsim_matrix(g.param(q), rows, g.param(d), rows), pos, exp(g.param(log_tau))); },
        {&q, &d, &log_tau});
  }
  {
    Parameter sim("sim", uniform(Shape{1, 5}, rng));
    Parameter log_tau("log_tau", Tensor::scalar(std::log(0.2)));
    const std::vector<std::size_t> pos{0};
    check("infonce_rag", [&](Graph& g) { return infonce(g.param(sim), pos, exp(g.param(log_tau))); },
          {&sim, &log_tau});
  }
  {
    Parameter s("student", uniform(Shape{3}, rng));
    Parameter alpha("alpha", Tensor::scalar(0.8));
    const std::vector<double> teacher{2.0, 0.3, 0.7};
    const std::vector<std::size_t> hard{1, 2};
    check("margin_mse", [&](Graph& g) { return margin_mse(g.param(s), teacher, 0, hard, g.param(alpha)); },
          {&s, &alpha});
  }
  {
    Parameter s("student", uniform(Shape{3, 7}, rng));
    const Tensor t = uniform(Shape{3, 7}, rng, -2.0, 2.0);
    check("kl_distill", [&](Graph& g) { return kl_distill(g.param(s), t); }, {&s});
  }
  {
    Projections proj(8, seed + 7);
    for (Parameter* p : proj.parameters()) p->value = uniform(p->value.shape(), rng, -0.5, 0.5);
    Parameter hidden("hidden", uniform(Shape{3, 8}, rng));
    const Tensor target = uniform(Shape{3, 8}, rng);
    std::vector<Parameter*> ret = proj.ret().params().all();
    ret.push_back(&hidden);
    check("ret_block",
          [&](Graph& g) { return sum(mul(ret_project(g, g.param(hidden), proj.ret()), g.constant(target))); }, ret);
    std::vector<Parameter*> comp = proj.comp().params().all();
    comp.push_back(&hidden);
    check("comp_block",
          [&](Graph& g) { return sum(mul(comp_project(g, g.param(hidden), proj.comp()), g.constant(target))); },
          comp);
  }

  // End-to-end through the LM on a micro world.
  const SyntheticWorld world = synth_corpus(seed + 11, 4, 4);
  std::vector<std::string> texts = template_texts();
  for (const Passage& p : world.passages) texts.push_back(p.text);
  for (const TrainExample& e : world.examples) {
    texts.push_back(e.question);
    texts.insert(texts.end(), e.answers.begin(), e.answers.end());
  }
  const Vocabulary vocab = Vocabulary::build(texts);
  const LmConfig lc{.layers = 1, .heads = 2, .d = 8, .vocab = vocab.size(), .max_len = 96, .t = 2};
  TrainConfig config;
  config.t = 2;
  config.max_gen_docs = 2;
  {
    EcgModel model(vocab, lc, seed + 1);
    const std::vector<SslPair> batch{
        SslPair{world.passages[0].text, world.passages[0].text, SslStrategy::kReconstruction, 2, 1},
        SslPair{world.passages[1].text, world.passages[2].text, SslStrategy::kNeighboring, 2, 2}};
    check("ssl_loss", [&](Graph& g) { return ssl_loss(g, model, batch, true).total; }, model.parameters());
  }
  {
    EcgModel model(vocab, lc, seed + 2);
    model.scaling().alpha().value[0] = 0.9;
    const LanguageModel teacher(lc, seed + 3, "teacher");
    std::mt19937_64 item_rng(seed + 4);
    const std::vector<RagItem> batch{make_rag_item(world.examples[0], config, item_rng),
                                     make_rag_item(world.examples[1], config, item_rng)};
    check("rag_loss", [&](Graph& g) { return rag_loss(g, model, &teacher, batch, config).total; },
          model.parameters());
  }
  return out;
}

}  // namespace ecg
