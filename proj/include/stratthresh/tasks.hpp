#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stratthresh/config.hpp"

namespace stratthresh {

inline const std::vector<std::string> kTaskNames{"optimize",         "sweep",       "fairness",   "estimate",
                                                 "reproduce-tables", "noise-sweep", "ingest-fico"};

struct TaskOutcome {
  std::string summary;  // one line
  std::vector<std::filesystem::path> outputs;
};

// Runs config.task. Input paths in params resolve against config.base_dir;
// output paths are used as given. Every file is written atomically.
TaskOutcome run_task(const ExperimentConfig& config);

TaskOutcome run_config_file(const std::filesystem::path& path);

}  // namespace stratthresh
