#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace msgrpo {

/// Raised when a caller breaks an operation's precondition (stepping a
/// terminal state, a singleton advantage group, G' > G, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

enum class Direction : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down, Direction::Left,
                                                      Direction::Right};

/// An action is a direction or the NO_ACTION sentinel (std::nullopt).
using Action = std::optional<Direction>;
inline constexpr Action kNoAction = std::nullopt;

std::string_view to_string(Direction d);
std::string action_to_string(Action a);
std::optional<Direction> direction_from_word(std::string_view lowercase_word);

/// Row/column offsets with Up decreasing the row.
constexpr int row_delta(Direction d) {
  return d == Direction::Up ? -1 : (d == Direction::Down ? 1 : 0);
}
constexpr int col_delta(Direction d) {
  return d == Direction::Left ? -1 : (d == Direction::Right ? 1 : 0);
}

/// The two directions at right angles to `d`, counter-clockwise one first.
constexpr std::array<Direction, 2> perpendicular(Direction d) {
  switch (d) {
    case Direction::Up:
      return {Direction::Left, Direction::Right};
    case Direction::Down:
      return {Direction::Right, Direction::Left};
    case Direction::Left:
      return {Direction::Down, Direction::Up};
    case Direction::Right:
      return {Direction::Up, Direction::Down};
  }
  return {Direction::Left, Direction::Right};
}

struct GridPos {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const GridPos&, const GridPos&) = default;
  constexpr GridPos moved(Direction d) const { return {row + row_delta(d), col + col_delta(d)}; }
};

std::string to_string(GridPos p);

/// FNV-1a; stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t stable_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Randomness. Every stochastic component takes a caller-owned engine, so a
// run is a pure function of the seeds that created those engines.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; combines a base seed with a stream index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace msgrpo
