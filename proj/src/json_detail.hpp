#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crawler/world.hpp"

namespace crawler {

// Shared by the world and scenario loaders.

/// "line N" for a byte offset into text.
std::string line_of(std::string_view text, std::size_t byte);
double number_at(const nlohmann::json& j, const std::string& key, const std::string& where);
double number_or(const nlohmann::json& j, const std::string& key, double fallback, const std::string& where);

/// Scenario files carry their dynamic obstacle schedule in the world's obstacle format.
std::vector<Obstacle> parse_obstacle_list(const nlohmann::json& arr, const std::string& where);

}  // namespace crawler
