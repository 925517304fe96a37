#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace pllbeam {

inline constexpr std::size_t kAlphabetSize = 20;

/// Canonical residue ordering. Every logit row and frequency row is aligned to it,
/// and remote providers must declare exactly this string at handshake.
inline constexpr std::string_view kAlphabetCodes = "ACDEFGHIKLMNPQRSTVWY";

namespace detail {
constexpr std::array<signed char, 256> make_index_table() {
  std::array<signed char, 256> table{};
  for (auto& v : table) v = -1;
  for (std::size_t i = 0; i < kAlphabetCodes.size(); ++i) {
    table[static_cast<unsigned char>(kAlphabetCodes[i])] = static_cast<signed char>(i);
  }
  return table;
}
inline constexpr auto kIndexTable = make_index_table();
}  // namespace detail

constexpr std::optional<std::size_t> residue_index(char code) {
  const auto v = detail::kIndexTable[static_cast<unsigned char>(code)];
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

constexpr bool is_residue(char code) { return residue_index(code).has_value(); }

/// Index of a code already known to be valid (sequences validate at construction).
constexpr std::size_t index_of(char code) {
  return static_cast<std::size_t>(detail::kIndexTable[static_cast<unsigned char>(code)]);
}

constexpr char residue_code(std::size_t index) { return kAlphabetCodes[index]; }

}  // namespace pllbeam
