#include "fedrec/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "fedrec/error.h"

namespace fedrec {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError(key + ": invalid value '" + value + "' (expected " +
                    expected + ")");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "non-negative integer");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (v == "inf") return INFINITY;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() ||
      std::isnan(out)) {
    bad_value(key, v, "number");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true/false");
}

template <typename T>
std::vector<T> to_list(const std::string& key, const std::string& v,
                       T (*conv)(const std::string&, const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(conv(key, item));
  }
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)>
      set;
  // Returns nullopt when the field is unset.
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

#define SIZE_FIELD(path)                                                      \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
      c.path = to_size(k, v);                                                 \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          return std::to_string(c.path);                                      \
        }                                                                     \
  }
#define DOUBLE_FIELD(path)                                                    \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
      c.path = to_double(k, v);                                               \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          return fmt(c.path);                                                 \
        }                                                                     \
  }
#define OPT_DOUBLE_FIELD(path)                                                \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
      c.path = to_double(k, v);                                               \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          if (!c.path) return std::nullopt;                                   \
          return fmt(*c.path);                                                \
        }                                                                     \
  }
#define OPT_SIZE_FIELD(path)                                                  \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
      c.path = to_size(k, v);                                                 \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          if (!c.path) return std::nullopt;                                   \
          return std::to_string(*c.path);                                     \
        }                                                                     \
  }
#define BOOL_FIELD(path)                                                      \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
      c.path = to_bool(k, v);                                                 \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          return std::string(c.path ? "true" : "false");                      \
        }                                                                     \
  }
#define STRING_FIELD(path)                                                    \
  Field {                                                                     \
    [](ExperimentConfig& c, const std::string&, const std::string& v) {       \
      c.path = v;                                                             \
    },                                                                        \
        [](const ExperimentConfig& c) -> std::optional<std::string> {        \
          return c.path;                                                      \
        }                                                                     \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"data.source",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "synth") {
            c.source = DataSource::kSynth;
          } else if (v == "mind") {
            c.source = DataSource::kMind;
          } else {
            bad_value(k, v, "synth or mind");
          }
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::string(c.source == DataSource::kSynth ? "synth" : "mind");
        }}},
      {"data.news", STRING_FIELD(news_path)},
      {"data.behaviors", STRING_FIELD(behaviors_path)},
      {"data.max_title_len", SIZE_FIELD(max_title_len)},
      {"data.seed",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.data_seed = to_u64(k, v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::to_string(c.data_seed);
        }}},
      {"synth.n_users", SIZE_FIELD(synth.n_users)},
      {"synth.n_news", SIZE_FIELD(synth.n_news)},
      {"synth.n_topics", SIZE_FIELD(synth.n_topics)},
      {"synth.title_len", SIZE_FIELD(synth.title_len)},
      {"synth.history_min", SIZE_FIELD(synth.history_min)},
      {"synth.history_max", SIZE_FIELD(synth.history_max)},
      {"synth.impressions_per_user", SIZE_FIELD(synth.impressions_per_user)},
      {"synth.candidates_per_impression",
       SIZE_FIELD(synth.candidates_per_impression)},
      {"synth.tokens_per_topic", SIZE_FIELD(synth.tokens_per_topic)},
      {"synth.common_tokens", SIZE_FIELD(synth.common_tokens)},
      {"synth.topic_token_prob", DOUBLE_FIELD(synth.topic_token_prob)},
      {"synth.click_scale", DOUBLE_FIELD(synth.click_scale)},
      {"synth.affinity_concentration",
       DOUBLE_FIELD(synth.affinity_concentration)},
      {"model.embed_dim", SIZE_FIELD(model.embed_dim)},
      {"model.attn_hidden", SIZE_FIELD(model.attn_hidden)},
      {"model.max_history_len", SIZE_FIELD(model.max_history_len)},
      {"model.negatives", SIZE_FIELD(model.negatives)},
      {"model.dropout", DOUBLE_FIELD(model.dropout)},
      {"fed.clients_per_round", SIZE_FIELD(fed.clients_per_round)},
      {"fed.rounds", SIZE_FIELD(fed.rounds)},
      {"fed.lr", DOUBLE_FIELD(fed.lr)},
      {"fed.local_epochs", SIZE_FIELD(fed.local_epochs)},
      {"fed.server_lr", DOUBLE_FIELD(fed.server_lr)},
      {"fed.beta1", DOUBLE_FIELD(fed.beta1)},
      {"fed.beta2", DOUBLE_FIELD(fed.beta2)},
      {"fed.tau", DOUBLE_FIELD(fed.tau)},
      {"attack.name",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.attack.kind = parse_attack_kind(v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::string(to_string(c.attack.kind));
        }}},
      {"attack.lambda1", DOUBLE_FIELD(attack.lambda1)},
      {"attack.lambda2", DOUBLE_FIELD(attack.lambda2)},
      {"attack.lambda3", DOUBLE_FIELD(attack.lambda3)},
      {"attack.neighbor_refresh_k", SIZE_FIELD(attack.neighbor_refresh_k)},
      {"attack.known_news_ratio", DOUBLE_FIELD(attack.known_news_ratio)},
      {"attack.malicious_count",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.attack.malicious_count = to_size(k, v);
          c.malicious_ratio.reset();
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::to_string(c.attack.malicious_count);
        }}},
      {"attack.malicious_ratio", OPT_DOUBLE_FIELD(malicious_ratio)},
      {"attack.collude", BOOL_FIELD(attack.collude)},
      {"attack.jitter", DOUBLE_FIELD(attack.jitter)},
      {"attack.eta", OPT_DOUBLE_FIELD(attack.eta)},
      {"attack.z_override", OPT_DOUBLE_FIELD(attack.z_override)},
      {"attack.fang_f", SIZE_FIELD(attack.fang_f)},
      {"attack.fang_c", OPT_SIZE_FIELD(attack.fang_c)},
      {"attack.fang_local_krum", BOOL_FIELD(attack.fang_local_krum)},
      {"defense.name",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.defense.kind = parse_defense_kind(v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::string(to_string(c.defense.kind));
        }}},
      {"defense.f", OPT_SIZE_FIELD(defense.f)},
      {"defense.c", OPT_SIZE_FIELD(defense.c)},
      {"defense.beta", DOUBLE_FIELD(defense.beta)},
      {"defense.rho", OPT_DOUBLE_FIELD(defense.rho)},
      {"run.eval_every", SIZE_FIELD(eval_every)},
      {"run.calibration_rounds", SIZE_FIELD(calibration_rounds)},
      {"run.checkpoint_rounds",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.checkpoint_rounds = to_list<std::size_t>(k, v, &to_size);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return fmt_list(c.checkpoint_rounds);
        }}},
      {"run.seeds",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.seeds = to_list<std::uint64_t>(k, v, &to_u64);
          if (c.seeds.empty()) bad_value(k, v, "comma-separated seeds");
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return fmt_list(c.seeds);
        }}},
      {"run.out", STRING_FIELD(out_dir)},
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef OPT_DOUBLE_FIELD
#undef OPT_SIZE_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD

}  // namespace

ExperimentConfig desk_preset() {
  ExperimentConfig cfg;
  cfg.fed.server_lr = 0.002;
  cfg.malicious_ratio = 0.01;
  return cfg;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key + ": unknown configuration key");
  it->second.set(cfg, key, value);
}

ExperimentConfig config_from_key_values(
    const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg = desk_preset();
  for (const auto& [key, value] : kv) set_config_value(cfg, key, value);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  return config_from_key_values(parse_key_values(in));
}

std::string to_key_values(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (auto v = field.get(cfg)) out += key + "=" + *v + "\n";
  }
  return out;
}

void finalize(ExperimentConfig& cfg, std::size_t n_clients) {
  if (cfg.malicious_ratio) {
    const double r = *cfg.malicious_ratio;
    if (r < 0.0 || r >= 1.0) {
      throw ConfigError("attack.malicious_ratio must be in [0, 1)");
    }
    cfg.attack.malicious_count = static_cast<std::size_t>(
        std::llround(r * static_cast<double>(n_clients)));
  }
  if (cfg.attack.kind != AttackKind::kNone &&
      cfg.attack.malicious_count >= n_clients) {
    throw ConfigError("attack.malicious_count must be < number of clients (" +
                      std::to_string(n_clients) + ")");
  }
  if (cfg.eval_every > 0 && cfg.fed.rounds == 0) {
    throw ConfigError("fed.rounds must be >= 1");
  }
  validate(cfg.model);
  validate(cfg.fed, n_clients);
  validate(cfg.defense);
  AttackConfig attack = cfg.attack;
  if (attack.malicious_count == 0) attack.kind = AttackKind::kNone;
  validate(attack);
}

}  // namespace fedrec
