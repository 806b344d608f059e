#ifndef ECG_DATA_CORPUS_H_
#define ECG_DATA_CORPUS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ecg {

struct Passage {
  std::uint32_t id = 0;
  std::string text;
  std::size_t token_count = 0;  // whitespace words

  friend bool operator==(const Passage&, const Passage&) = default;
};

struct ScoredPassage {
  Passage passage;
  double score = 0.0;

  friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

struct TrainExample {
  std::string question;
  std::vector<std::string> answers;
  Passage positive;
  double positive_score = 0.0;
  std::vector<ScoredPassage> negatives;

  friend bool operator==(const TrainExample&, const TrainExample&) = default;
};

struct EvalQuery {
  std::uint32_t id = 0;
  std::string question;
  std::vector<std::string> answers;
  std::uint32_t gold_id = 0;

  friend bool operator==(const EvalQuery&, const EvalQuery&) = default;
};

std::vector<std::string> split_words(std::string_view text);
Passage make_passage(std::uint32_t id, std::string text);

// Greedy word-boundary chunks of `target_words`; the last chunk holds the
// remainder. Ids count up from first_id.
std::vector<Passage> chunk_text(std::string_view document, std::size_t target_words,
                                std::uint32_t first_id = 0);

// JSON lines, one {"id": ..., "text": ...} object per passage.
void save_corpus(const std::string& path, const std::vector<Passage>& passages);
std::vector<Passage> load_corpus(const std::string& path);

// JSON lines: {question, answers[], positive:{id,text}, negatives:[{id,text,score}], positive_score}.
void save_train_examples(const std::string& path, const std::vector<TrainExample>& examples);
// Rejects examples with fewer than min_negatives negatives or with a
// negative scored above the positive.
std::vector<TrainExample> load_train_examples(const std::string& path, std::size_t min_negatives = 2);

void save_eval_queries(const std::string& path, const std::vector<EvalQuery>& queries);
std::vector<EvalQuery> load_eval_queries(const std::string& path);

}  // namespace ecg

#endif  // ECG_DATA_CORPUS_H_
