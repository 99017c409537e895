#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"

namespace hypbridge::testing {

inline const nlohmann::json& golden() {
  static const nlohmann::json doc = [] {
    std::ifstream in(HYPBRIDGE_FIXTURES);
    return nlohmann::json::parse(in);
  }();
  return doc;
}

// Reference values are stored as decimal strings with 20 digits.
inline double ref(const nlohmann::json& entry) { return std::stod(entry.at("value").get<std::string>()); }

inline double rel_err(double got, double want) {
  return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

}  // namespace hypbridge::testing
