#pragma once

#include <string>

#include "gapflight/batch.hpp"

namespace gapflight {

/// Parses a trial configuration from a JSON document; every field has a
/// default, unknown keys are rejected. Throws ConfigError on bad input.
TrialConfig parse_trial_config(const std::string& json_text);

/// Reads a config file from disk. Throws IoError / ConfigError.
TrialConfig load_trial_config(const std::string& path);

/// Batch spec from the same document (the optional "batch" section), with
/// the rest of the config as the per-trial template.
BatchSpec parse_batch_spec(const std::string& json_text,
                           const std::string& output_dir);
BatchSpec load_batch_spec(const std::string& path,
                          const std::string& output_dir);

/// The full default configuration as a JSON document (the schema
/// reference; also what `--dump-config` prints).
std::string default_config_json();

}  // namespace gapflight
