#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compilot/kernel.hpp"

namespace compilot {

class LoopLevel {
 public:
  static LoopLevel depth(int d) { return LoopLevel(d); }
  static LoopLevel innermost() { return LoopLevel(-1); }

  bool is_innermost() const { return value_ < 0; }
  int depth() const { return value_; }
  // Depth in a nest of the given size.
  int resolve(std::size_t nest_depth) const {
    return is_innermost() ? static_cast<int>(nest_depth) - 1 : value_;
  }
  std::string to_string() const;
  bool operator==(const LoopLevel&) const = default;

 private:
  explicit LoopLevel(int v) : value_(v) {}
  int value_;
};

struct Fuse {
  std::string comp;
  std::string partner;
  LoopLevel level = LoopLevel::depth(0);
  bool operator==(const Fuse&) const = default;
};

struct Interchange {
  std::string comp;
  LoopLevel first = LoopLevel::depth(0);
  LoopLevel second = LoopLevel::depth(0);
  bool operator==(const Interchange&) const = default;
};

struct Parallelize {
  std::string comp;
  LoopLevel level = LoopLevel::depth(0);
  bool operator==(const Parallelize&) const = default;
};

struct Tile2D {
  std::string comp;
  std::array<LoopLevel, 2> levels{LoopLevel::depth(0), LoopLevel::depth(0)};
  std::array<std::int64_t, 2> factors{};
  bool operator==(const Tile2D&) const = default;
};

struct Tile3D {
  std::string comp;
  std::array<LoopLevel, 3> levels{LoopLevel::depth(0), LoopLevel::depth(0), LoopLevel::depth(0)};
  std::array<std::int64_t, 3> factors{};
  bool operator==(const Tile3D&) const = default;
};

struct Unroll {
  std::string comp;
  LoopLevel level = LoopLevel::depth(0);
  std::int64_t factor = 0;
  bool operator==(const Unroll&) const = default;
};

struct Skew {
  std::string comp;
  LoopLevel first = LoopLevel::depth(0);
  LoopLevel second = LoopLevel::depth(0);
  bool operator==(const Skew&) const = default;
};

struct Reverse {
  std::string comp;
  LoopLevel level = LoopLevel::depth(0);
  bool operator==(const Reverse&) const = default;
};

using Transformation = std::variant<Fuse, Interchange, Parallelize, Tile2D, Tile3D, Unroll, Skew, Reverse>;

std::string_view command_name(const Transformation& t);
const std::string& target_comp(const Transformation& t);
std::string& target_comp(Transformation& t);

struct Schedule {
  std::vector<Transformation> commands;
  bool operator==(const Schedule&) const = default;
};

// Canonical text: commands joined by '+', no whitespace.
std::string print_command(const Transformation& t);
std::string print_schedule(const Schedule& s);

// Throws ScheduleSyntaxError with a byte offset into `text`.
Schedule parse_schedule(std::string_view text);

inline constexpr std::string_view kQuitToken = "no_further_transformations";

struct LLMResponse {
  enum class Payload { Schedule, Quit, Unparseable };
  std::string reasoning;
  Payload payload = Payload::Unparseable;
  std::string schedule_text;  // verbatim contents of the tags
  std::string reason;         // set for Unparseable
};

LLMResponse parse_response(std::string_view message);

struct InvalidReason {
  std::size_t command_index = 0;
  std::string reason;
  bool operator==(const InvalidReason&) const = default;
};

// Limits enforced by the structural pre-filter.
inline constexpr std::int64_t kMaxUnrollFactor = 64;
inline constexpr std::int64_t kMaxTileFactor = 512;

std::optional<InvalidReason> prevalidate(const Schedule& schedule, const Kernel& kernel);

// Requires prevalidate to have passed.
Schedule canonicalize(const Schedule& schedule, const Kernel& kernel);

}  // namespace compilot
