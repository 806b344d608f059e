#include "ecg/data/synthetic.h"

#include <algorithm>
#include <random>
#include <set>

#include "ecg/common/error.h"

namespace ecg {
namespace {

const std::vector<std::string> kRelations = {"capital", "river", "mountain", "founder",
                                             "emblem",  "harbor", "festival", "guild"};
const std::set<std::string> kStopWords = {"what", "is", "the", "of", "a", "an"};

std::vector<std::string> pseudo_words() {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::vector<std::string> words;
  for (char c1 : consonants)
    for (char v1 : vowels)
      for (char c2 : consonants)
        for (char v2 : vowels) words.push_back(std::string{c1, v1, c2, v2});
  return words;
}

std::string gold_text(const Fact& f, const std::string& landmark) {
  return "the " + f.relation + " of " + f.entity + " is " + f.value + " . " + f.entity + " lies near " +
         landmark + " .";
}

}  // namespace

std::string question_for(const std::string& relation, const std::string& entity) {
  return "what is the " + relation + " of " + entity;
}

double teacher_score(const std::string& question, const Passage& passage, bool gold) {
  if (gold) return 2.0;
  std::vector<std::string> content;
  for (std::string& w : split_words(question)) {
    if (!kStopWords.count(w)) content.push_back(std::move(w));
  }
  if (content.empty()) return 0.0;
  const std::vector<std::string> words = split_words(passage.text);
  const std::set<std::string> present(words.begin(), words.end());
  std::size_t hits = 0;
  for (const std::string& w : content) hits += present.count(w);
  return static_cast<double>(hits) / static_cast<double>(content.size());
}

SyntheticWorld synth_corpus(std::uint64_t seed, std::size_t n_facts, std::size_t n_distractors,
                            std::size_t max_negatives) {
  if (n_facts < 4) throw ContractError("synth_corpus: n_facts must be at least 4");
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool = pseudo_words();
  const std::size_t needed = 2 * n_facts + n_facts + n_distractors;
  if (needed > pool.size()) {
    throw ContractError("synth_corpus: need " + std::to_string(needed) + " distinct names, only " +
                        std::to_string(pool.size()) + " available");
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t next = 0;
  auto take = [&] { return pool[next++]; };

  SyntheticWorld world;
  std::vector<std::size_t> relation_of(n_facts);
  std::uniform_int_distribution<std::size_t> rel_dist(0, kRelations.size() - 1);
  for (std::size_t i = 0; i < n_facts; ++i) {
    relation_of[i] = rel_dist(rng);
    Fact f{take(), kRelations[relation_of[i]], take(), static_cast<std::uint32_t>(i)};
    world.passages.push_back(make_passage(f.gold_id, gold_text(f, take())));
    world.facts.push_back(std::move(f));
  }
  for (std::size_t j = 0; j < n_distractors; ++j) {
    const std::size_t owner = j % n_facts;
    const std::size_t round = j / n_facts;
    const std::string& relation = kRelations[(relation_of[owner] + 1 + round) % kRelations.size()];
    const std::string& entity = world.facts[owner].entity;
    world.passages.push_back(make_passage(static_cast<std::uint32_t>(n_facts + j),
                                          "the " + relation + " of " + entity + " is unknown . " + entity +
                                              " lies near " + take() + " ."));
  }

  for (std::size_t i = 0; i < n_facts; ++i) {
    const Fact& f = world.facts[i];
    TrainExample ex;
    ex.question = question_for(f.relation, f.entity);
    ex.answers = {f.value};
    ex.positive = world.passages[f.gold_id];
    ex.positive_score = teacher_score(ex.question, ex.positive, true);
    std::vector<ScoredPassage> candidates;
    for (const Passage& p : world.passages) {
      if (p.id == f.gold_id) continue;
      const std::vector<std::string> words = split_words(p.text);
      if (std::find(words.begin(), words.end(), f.value) != words.end()) continue;
      candidates.push_back({p, teacher_score(ex.question, p, false)});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ScoredPassage& a, const ScoredPassage& b) { return a.score > b.score; });
    // Highest-scored distractors first, the rest filled at random.
    const std::size_t hard = std::min<std::size_t>(
        candidates.size(), std::count_if(candidates.begin(), candidates.end(),
                                         [](const ScoredPassage& c) { return c.score > 0.0; }));
    std::shuffle(candidates.begin() + static_cast<std::ptrdiff_t>(hard), candidates.end(), rng);
    candidates.resize(std::min(candidates.size(), max_negatives));
    ex.negatives = std::move(candidates);
    world.examples.push_back(std::move(ex));
    world.queries.push_back({static_cast<std::uint32_t>(i), world.examples.back().question, {f.value}, f.gold_id});
  }
  return world;
}

}  // namespace ecg
