#include "ecg/data/corpus.h"

#include <cctype>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "ecg/common/error.h"

namespace ecg {
namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

// Calls fn(object, line_no) for each non-blank line.
template <typename Fn>
void for_each_json_line(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
      fn(obj, line_no);
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

json passage_json(const Passage& p) { return json{{"id", p.id}, {"text", p.text}}; }

Passage passage_from(const json& obj) {
  return make_passage(obj.at("id").get<std::uint32_t>(), obj.at("text").get<std::string>());
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

Passage make_passage(std::uint32_t id, std::string text) {
  Passage p{id, std::move(text), 0};
  p.token_count = split_words(p.text).size();
  return p;
}

std::vector<Passage> chunk_text(std::string_view document, std::size_t target_words, std::uint32_t first_id) {
  if (target_words < 2) throw ContractError("chunk_text: target must be at least 2 words");
  const std::vector<std::string> words = split_words(document);
  std::vector<Passage> chunks;
  for (std::size_t begin = 0; begin < words.size(); begin += target_words) {
    const std::size_t end = std::min(words.size(), begin + target_words);
    std::string text;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) text += ' ';
      text += words[i];
    }
    chunks.push_back(make_passage(first_id + static_cast<std::uint32_t>(chunks.size()), std::move(text)));
  }
  return chunks;
}

void save_corpus(const std::string& path, const std::vector<Passage>& passages) {
  std::ofstream out = open_out(path);
  for (const Passage& p : passages) out << passage_json(p).dump() << '\n';
}

std::vector<Passage> load_corpus(const std::string& path) {
  std::vector<Passage> passages;
  std::unordered_map<std::uint32_t, std::size_t> seen;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    Passage p = passage_from(obj);
    if (auto it = seen.find(p.id); it != seen.end()) {
      throw FormatError(path + ": duplicate passage id " + std::to_string(p.id) + " on lines " +
                        std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    if (p.text.empty()) throw FormatError(path + ":" + std::to_string(line_no) + ": empty passage text");
    seen[p.id] = line_no;
    passages.push_back(std::move(p));
  });
  return passages;
}

void save_train_examples(const std::string& path, const std::vector<TrainExample>& examples) {
  std::ofstream out = open_out(path);
  for (const TrainExample& ex : examples) {
    json negatives = json::array();
    for (const ScoredPassage& n : ex.negatives) {
      negatives.push_back({{"id", n.passage.id}, {"text", n.passage.text}, {"score", n.score}});
    }
    json obj = {{"question", ex.question},
                {"answers", ex.answers},
                {"positive", passage_json(ex.positive)},
                {"negatives", negatives},
                {"positive_score", ex.positive_score}};
    out << obj.dump() << '\n';
  }
}

std::vector<TrainExample> load_train_examples(const std::string& path, std::size_t min_negatives) {
  std::vector<TrainExample> examples;
  for_each_json_line(path, [&](const json& obj, std::size_t line_no) {
    TrainExample ex;
    ex.question = obj.at("question").get<std::string>();
    ex.answers = obj.at("answers").get<std::vector<std::string>>();
    ex.positive = passage_from(obj.at("positive"));
    ex.positive_score = obj.at("positive_score").get<double>();
    for (const json& n : obj.at("negatives")) {
      ex.negatives.push_back({passage_from(n), n.at("score").get<double>()});
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (ex.answers.empty()) throw FormatError(where + ": example has no answers");
    if (ex.negatives.size() < min_negatives) {
      throw FormatError(where + ": example has " + std::to_string(ex.negatives.size()) +
                        " negatives, at least " + std::to_string(min_negatives) + " required");
    }
    for (const ScoredPassage& n : ex.negatives) {
      if (n.score > ex.positive_score) {
        throw FormatError(where + ": negative " + std::to_string(n.passage.id) + " outscores the positive");
      }
    }
    examples.push_back(std::move(ex));
  });
  return examples;
}

void save_eval_queries(const std::string& path, const std::vector<EvalQuery>& queries) {
  std::ofstream out = open_out(path);
  for (const EvalQuery& q : queries) {
    out << json{{"id", q.id}, {"question", q.question}, {"answers", q.answers}, {"gold_id", q.gold_id}}.dump()
        << '\n';
  }
}

std::vector<EvalQuery> load_eval_queries(const std::string& path) {
  std::vector<EvalQuery> queries;
  for_each_json_line(path, [&](const json& obj, std::size_t) {
    queries.push_back({obj.at("id").get<std::uint32_t>(), obj.at("question").get<std::string>(),
                       obj.at("answers").get<std::vector<std::string>>(), obj.at("gold_id").get<std::uint32_t>()});
  });
  return queries;
}

}  // namespace ecg
