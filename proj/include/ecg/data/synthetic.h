#ifndef ECG_DATA_SYNTHETIC_H_
#define ECG_DATA_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/data/corpus.h"

namespace ecg {

struct Fact {
  std::string entity;
  std::string relation;
  std::string value;
  std::uint32_t gold_id = 0;
};

struct SyntheticWorld {
  std::vector<Fact> facts;
  std::vector<Passage> passages;
  std::vector<TrainExample> examples;
  std::vector<EvalQuery> queries;
};

// Templated fact world. Fact i gets a gold passage
//   "the <relation> of <entity> is <value> . <entity> lies near <landmark> ."
// and distractors about the same entities with other relations and the value
// "unknown". Values and landmarks are unique, so only the gold passage holds
// an answer string.
SyntheticWorld synth_corpus(std::uint64_t seed, std::size_t n_facts, std::size_t n_distractors,
                            std::size_t max_negatives = 8);

std::string question_for(const std::string& relation, const std::string& entity);

// 2 for the gold passage, otherwise the fraction of the question's content
// words that occur in the passage.
double teacher_score(const std::string& question, const Passage& passage, bool gold);

}  // namespace ecg

#endif  // ECG_DATA_SYNTHETIC_H_
