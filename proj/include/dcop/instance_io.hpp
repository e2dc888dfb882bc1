#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dcop/instance.hpp"

namespace dcop {

inline constexpr int kInstanceFormatVersion = 1;

nlohmann::json to_json(const ProblemInstance& p);
/// Throws ParseError naming the offending JSON path.
ProblemInstance instance_from_json(const nlohmann::json& doc);

std::string serialize(const ProblemInstance& p);
ProblemInstance parse_instance(std::string_view text);

void save_instance(const std::filesystem::path& path, const ProblemInstance& p);
ProblemInstance load_instance(const std::filesystem::path& path);

}  // namespace dcop
