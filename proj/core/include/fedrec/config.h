#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedrec/attacks.h"
#include "fedrec/data.h"
#include "fedrec/defenses.h"
#include "fedrec/fedcore.h"
#include "fedrec/model.h"

namespace fedrec {

enum class DataSource { kSynth, kMind };

// Everything needed to reproduce a run. Defaults form the "desk" preset.
struct ExperimentConfig {
  DataSource source = DataSource::kSynth;
  std::string news_path;
  std::string behaviors_path;
  std::size_t max_title_len = kDefaultMaxTitleLen;
  SynthSpec synth;
  std::uint64_t data_seed = 7;

  ModelConfig model;
  FedConfig fed;
  AttackConfig attack;
  // When set, overrides attack.malicious_count as round(ratio * N).
  std::optional<double> malicious_ratio;
  DefenseRule defense;

  std::size_t eval_every = 50;
  std::size_t calibration_rounds = 10;
  std::vector<std::size_t> checkpoint_rounds;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "runs";
};

ExperimentConfig desk_preset();

// Flat "section.key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::istream& in);

// Applies one key; throws ConfigError naming the key on bad input.
void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

ExperimentConfig config_from_key_values(
    const std::map<std::string, std::string>& kv);
ExperimentConfig load_config(const std::string& path);

// Canonical key=value dump of every setting; reloading it yields an equal
// configuration.
std::string to_key_values(const ExperimentConfig& cfg);

// Resolves the malicious count against the number of clients and checks
// cross-field constraints.
void finalize(ExperimentConfig& cfg, std::size_t n_clients);

}  // namespace fedrec
