#include "ecg/training/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "ecg/common/error.h"

namespace ecg {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ContractError("config: " + std::string(key) + " expects a non-negative integer, got '" +
                        std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ContractError("config: " + std::string(key) + " expects a number, got '" + s + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ContractError("config: " + std::string(key) + " expects on/off, got '" + std::string(value) + "'");
}

struct Field {
  std::string name;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field size_field(std::string name, T TrainConfig::*member) {
  return {name,
          [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_integer<T>(name, v); },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(std::string name, double TrainConfig::*member) {
  return {name, [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_double(name, v); },
          [member](const TrainConfig& c) { return format_double(c.*member); }};
}

Field bool_field(std::string name, bool TrainConfig::*member) {
  return {name, [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_bool(name, v); },
          [member](const TrainConfig& c) { return std::string(c.*member ? "on" : "off"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      size_field("seed", &TrainConfig::seed),
      size_field("layers", &TrainConfig::layers),
      size_field("heads", &TrainConfig::heads),
      size_field("d", &TrainConfig::d),
      size_field("max_len", &TrainConfig::max_len),
      size_field("t", &TrainConfig::t),
      size_field("n_facts", &TrainConfig::n_facts),
      size_field("n_distractors", &TrainConfig::n_distractors),
      size_field("max_negatives", &TrainConfig::max_negatives),
      size_field("min_negatives", &TrainConfig::min_negatives),
      size_field("chunk_words", &TrainConfig::chunk_words),
      double_field("held_out_fraction", &TrainConfig::held_out_fraction),
      size_field("ssl_steps", &TrainConfig::ssl_steps),
      size_field("ssl_batch", &TrainConfig::ssl_batch),
      size_field("n_min", &TrainConfig::n_min),
      size_field("n_max", &TrainConfig::n_max),
      size_field("rag_steps", &TrainConfig::rag_steps),
      size_field("rag_batch", &TrainConfig::rag_batch),
      size_field("hard_negatives", &TrainConfig::hard_negatives),
      size_field("max_gen_docs", &TrainConfig::max_gen_docs),
      double_field("tau_neg", &TrainConfig::tau_neg),
      size_field("teacher_steps", &TrainConfig::teacher_steps),
      size_field("teacher_batch", &TrainConfig::teacher_batch),
      double_field("lr", &TrainConfig::lr),
      double_field("weight_decay", &TrainConfig::weight_decay),
      double_field("warmup_ratio", &TrainConfig::warmup_ratio),
      double_field("clip_norm", &TrainConfig::clip_norm),
      bool_field("contrastive_pretrain", &TrainConfig::contrastive_pretrain),
      bool_field("distillation", &TrainConfig::distillation),
      bool_field("loss_scaling", &TrainConfig::loss_scaling),
      bool_field("weighted_negatives", &TrainConfig::weighted_negatives),
      size_field("budget_min", &TrainConfig::budget_min),
      size_field("budget_max", &TrainConfig::budget_max),
      size_field("budget_step", &TrainConfig::budget_step),
      size_field("pool_top_n", &TrainConfig::pool_top_n),
      size_field("max_new", &TrainConfig::max_new),
      size_field("threads", &TrainConfig::threads),
  };
  return kFields;
}

}  // namespace

std::size_t TrainConfig::ssl_n_min() const { return n_min ? n_min : std::max<std::size_t>(1, t / 2); }
std::size_t TrainConfig::ssl_n_max() const { return n_max ? n_max : t; }

void TrainConfig::validate() const {
  if (t == 0) throw ContractError("config: t must be at least 1");
  if (d == 0 || heads == 0 || d % heads != 0) throw ContractError("config: d must be a positive multiple of heads");
  if (!(tau_neg > 0.0)) throw ContractError("config: tau_neg must be positive");
  if (ssl_n_min() == 0 || ssl_n_min() > ssl_n_max()) throw ContractError("config: need 1 <= n_min <= n_max");
  if (max_gen_docs == 0) throw ContractError("config: max_gen_docs must be at least 1");
  if (hard_negatives == 0) throw ContractError("config: hard_negatives must be at least 1");
  if (held_out_fraction < 0.0 || held_out_fraction >= 1.0) {
    throw ContractError("config: held_out_fraction must lie in [0, 1)");
  }
  if (budget_step == 0 || budget_min == 0 || budget_min > budget_max) {
    throw ContractError("config: budget grid needs 1 <= budget_min <= budget_max and a positive step");
  }
  if (ssl_batch == 0 || rag_batch == 0 || teacher_batch == 0) throw ContractError("config: batch sizes must be positive");
  if (threads == 0) throw ContractError("config: threads must be at least 1");
}

void apply_override(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ContractError("config: expected key=value, got '" + std::string(assignment) + "'");
  }
  const std::string_view key = trim(assignment.substr(0, eq));
  const std::string_view value = trim(assignment.substr(eq + 1));
  for (const Field& f : fields()) {
    if (f.name == key) {
      f.set(config, value);
      return;
    }
  }
  throw ContractError("config: unknown key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      try {
        apply_override(base, line);
      } catch (const ContractError& e) {
        throw ContractError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  base.validate();
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

std::string config_to_string(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.name + "=" + f.get(config) + "\n";
  return out;
}

std::string config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_string(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.name);
  return keys;
}

}  // namespace ecg
