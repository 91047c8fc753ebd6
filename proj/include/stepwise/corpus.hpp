#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/error.hpp"
#include "stepwise/state.hpp"

namespace stepwise {

// Theorem corpus: JSONL of {"name": ..., "statement": ...}. Blank lines are
// skipped; names must be unique.
inline std::vector<TheoremSpec> read_corpus(std::istream& in, const std::string& origin = "corpus") {
  std::vector<TheoremSpec> out;
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TheoremSpec spec{j.at("name").get<std::string>(), j.at("statement").get<std::string>()};
      if (std::find(names.begin(), names.end(), spec.name) != names.end())
        throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate theorem name '" + spec.name + "'");
      names.push_back(spec.name);
      out.push_back(std::move(spec));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TheoremSpec> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  auto out = read_corpus(in, path);
  if (out.empty()) throw FormatError("corpus '" + path + "' is empty");
  return out;
}

} // namespace stepwise
