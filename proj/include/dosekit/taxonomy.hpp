#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dosekit {

// Nine-code harm taxonomy O1..O9.
enum class Category : std::uint8_t { O1 = 1, O2, O3, O4, O5, O6, O7, O8, O9 };

std::string category_name(Category c);
std::optional<Category> parse_category(std::string_view s);
Category category_from_index(std::size_t i);  // 0 -> O1, wraps modulo 9

// Prompt class used to partition evaluation.
enum class Stratum : std::uint8_t { safe, adversarial };

std::string_view stratum_name(Stratum s);
std::optional<Stratum> parse_stratum(std::string_view s);

}  // namespace dosekit
