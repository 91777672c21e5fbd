#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <fmt/format.h>
#include <unistd.h>

#include "pilotwave/model.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             fmt::format("pilotwave_{}_{}_{}", tag, static_cast<long>(::getpid()), counter++);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline pilotwave::Scenario scenario_from(const std::string& text) {
  return pilotwave::Scenario::from_config(pilotwave::ConfigTree::parse(text));
}

inline bool has_code(const std::vector<pilotwave::Diagnostic>& ds, const std::string& code) {
  for (const auto& d : ds) {
    if (d.code == code) return true;
  }
  return false;
}

}  // namespace testing
