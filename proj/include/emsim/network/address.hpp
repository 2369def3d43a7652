#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <variant>

namespace emsim {

struct GridCoord {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

inline std::int64_t manhattan(const GridCoord& a, const GridCoord& b) {
  return std::llabs(a.x - b.x) + std::llabs(a.y - b.y);
}

/// Opaque index for all-to-all networks, coordinate for grids.
using CourierId = std::variant<std::uint64_t, GridCoord>;

inline std::string to_string(const CourierId& id) {
  if (const auto* g = std::get_if<GridCoord>(&id)) return "(" + std::to_string(g->x) + "," + std::to_string(g->y) + ")";
  return "#" + std::to_string(std::get<std::uint64_t>(id));
}

/// Capability for one inbox: the courier that stores it plus a key issued
/// by that courier. Remains comparable after the inbox is closed.
struct Address {
  CourierId courier;
  std::uint64_t inbox = 0;
  friend auto operator<=>(const Address&, const Address&) = default;
};

inline std::string to_string(const Address& a) { return to_string(a.courier) + "/" + std::to_string(a.inbox); }

inline std::ostream& operator<<(std::ostream& os, const Address& a) { return os << to_string(a); }

}  // namespace emsim
