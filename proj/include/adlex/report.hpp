#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace adlex::report {

// Artifacts found in a run directory, keyed by their "artifact" field. Files
// are visited in file-name order; JSON files of any other kind are ignored.
struct Artifacts {
  std::vector<std::pair<std::string, nlohmann::json>> stats;
  std::vector<std::pair<std::string, nlohmann::json>> divergence;
  std::vector<std::pair<std::string, nlohmann::json>> markers;
  std::vector<std::pair<std::string, nlohmann::json>> train;
  std::vector<std::pair<std::string, nlohmann::json>> explanation;

  bool empty() const;
};

// Throws NoArtifacts when nothing usable is found, ParseError on broken JSON.
Artifacts collect(const std::filesystem::path& dir);

std::string to_markdown(const Artifacts& a);
nlohmann::json summary(const Artifacts& a);

}  // namespace adlex::report
