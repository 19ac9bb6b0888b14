#include <cctype>
#include <regex>

#include <fmt/format.h>

#include "compilot/error.hpp"
#include "compilot/schedule.hpp"

namespace compilot {

ScheduleSyntaxError::ScheduleSyntaxError(const std::string& message, std::size_t position)
    : Error(fmt::format("at position {}: {}", position, message)), position_(position), detail_(message) {}

std::string LoopLevel::to_string() const { return is_innermost() ? "L-1" : fmt::format("L{}", value_); }

std::string_view command_name(const Transformation& t) {
  static constexpr std::string_view names[] = {"Fuse", "Interchange", "Parallelize", "Tile2D",
                                               "Tile3D", "Unroll", "Skew", "Reverse"};
  return names[t.index()];
}

const std::string& target_comp(const Transformation& t) {
  return std::visit([](const auto& c) -> const std::string& { return c.comp; }, t);
}

std::string& target_comp(Transformation& t) {
  return std::visit([](auto& c) -> std::string& { return c.comp; }, t);
}

namespace {

struct Printer {
  std::string operator()(const Fuse& c) const {
    return fmt::format("{}.Fuse({},{})", c.comp, c.partner, c.level.to_string());
  }
  std::string operator()(const Interchange& c) const {
    return fmt::format("{}.Interchange({},{})", c.comp, c.first.to_string(), c.second.to_string());
  }
  std::string operator()(const Parallelize& c) const {
    return fmt::format("{}.Parallelize({})", c.comp, c.level.to_string());
  }
  std::string operator()(const Tile2D& c) const {
    return fmt::format("{}.Tile2D({},{},{},{})", c.comp, c.levels[0].to_string(), c.levels[1].to_string(),
                       c.factors[0], c.factors[1]);
  }
  std::string operator()(const Tile3D& c) const {
    return fmt::format("{}.Tile3D({},{},{},{},{},{})", c.comp, c.levels[0].to_string(), c.levels[1].to_string(),
                       c.levels[2].to_string(), c.factors[0], c.factors[1], c.factors[2]);
  }
  std::string operator()(const Unroll& c) const {
    return fmt::format("{}.Unroll({},{})", c.comp, c.level.to_string(), c.factor);
  }
  std::string operator()(const Skew& c) const {
    return fmt::format("{}.Skew({},{})", c.comp, c.first.to_string(), c.second.to_string());
  }
  std::string operator()(const Reverse& c) const {
    return fmt::format("{}.Reverse({})", c.comp, c.level.to_string());
  }
};

bool valid_comp_id(std::string_view s) {
  return s.size() == 6 && s.substr(0, 4) == "comp" && std::isdigit(static_cast<unsigned char>(s[4])) &&
         std::isdigit(static_cast<unsigned char>(s[5]));
}

struct Arg {
  std::string text;
  std::size_t pos;
};

class ScheduleParser {
 public:
  explicit ScheduleParser(std::string_view text) : s_(text) {}

  Schedule run() {
    Schedule out;
    skip_ws();
    if (pos_ >= s_.size()) throw ScheduleSyntaxError("empty schedule", 0);
    while (true) {
      out.commands.push_back(command());
      skip_ws();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] != '+') throw ScheduleSyntaxError(fmt::format("expected '+' but found '{}'", s_[pos_]), pos_);
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size()) throw ScheduleSyntaxError("expected a command after '+'", pos_);
    }
    return out;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string word() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) {
      throw ScheduleSyntaxError(fmt::format("expected '{}'", c), pos_);
    }
    ++pos_;
  }

  Transformation command() {
    std::size_t cpos = pos_;
    std::string comp = word();
    if (!valid_comp_id(comp)) {
      std::size_t end = pos_;
      while (end < s_.size() && s_[end] != '.' && s_[end] != '+' && !std::isspace(static_cast<unsigned char>(s_[end])))
        ++end;
      throw ScheduleSyntaxError(fmt::format("malformed comp_id '{}'", s_.substr(cpos, std::max(end, pos_) - cpos)),
                                cpos);
    }
    expect('.');
    skip_ws();
    std::size_t npos = pos_;
    std::string name = word();
    std::string lower;
    for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const std::map<std::string, std::pair<std::size_t, int>> table{
        {"fuse", {2, 0}},   {"interchange", {2, 1}}, {"parallelize", {1, 2}}, {"tile2d", {4, 3}},
        {"tile3d", {6, 4}}, {"unroll", {2, 5}},      {"skew", {2, 6}},        {"reverse", {1, 7}}};
    auto it = table.find(lower);
    if (it == table.end()) throw ScheduleSyntaxError(fmt::format("unknown command '{}'", name), npos);
    expect('(');
    std::vector<Arg> args;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      ++pos_;
    } else {
      while (true) {
        skip_ws();
        std::size_t apos = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != '+') ++pos_;
        std::string text(s_.substr(apos, pos_ - apos));
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
        args.push_back({text, apos});
        if (pos_ >= s_.size() || s_[pos_] == '+') throw ScheduleSyntaxError("expected ')'", pos_);
        if (s_[pos_++] == ')') break;
      }
    }
    auto [arity, kind] = it->second;
    static constexpr std::string_view canonical[] = {"Fuse", "Interchange", "Parallelize", "Tile2D",
                                                     "Tile3D", "Unroll", "Skew", "Reverse"};
    if (args.size() != arity) {
      throw ScheduleSyntaxError(fmt::format("wrong number of arguments for {}: expected {}, got {}",
                                            canonical[kind], arity, args.size()),
                                npos);
    }
    switch (kind) {
      case 0: {
        if (!valid_comp_id(args[0].text)) {
          throw ScheduleSyntaxError(fmt::format("malformed comp_id '{}'", args[0].text), args[0].pos);
        }
        return Fuse{comp, args[0].text, level(args[1])};
      }
      case 1:
        return Interchange{comp, level(args[0]), level(args[1])};
      case 2:
        return Parallelize{comp, level(args[0])};
      case 3: {
        Tile2D t{comp, {level(args[0]), level(args[1])}, {factor(args[2]), factor(args[3])}};
        adjacent(t.levels[0], t.levels[1], args[1].pos);
        return t;
      }
      case 4: {
        Tile3D t{comp,
                 {level(args[0]), level(args[1]), level(args[2])},
                 {factor(args[3]), factor(args[4]), factor(args[5])}};
        adjacent(t.levels[0], t.levels[1], args[1].pos);
        adjacent(t.levels[1], t.levels[2], args[2].pos);
        return t;
      }
      case 5:
        return Unroll{comp, level(args[0]), factor(args[1])};
      case 6: {
        Skew t{comp, level(args[0]), level(args[1])};
        adjacent(t.first, t.second, args[1].pos);
        return t;
      }
      default:
        return Reverse{comp, level(args[0])};
    }
  }

  static void adjacent(const LoopLevel& a, const LoopLevel& b, std::size_t pos) {
    if (a.is_innermost()) throw ScheduleSyntaxError("only the last level of a band may be L-1", pos);
    if (!b.is_innermost() && b.depth() != a.depth() + 1) {
      throw ScheduleSyntaxError(fmt::format("levels must be consecutive: {} does not follow {}", b.to_string(),
                                            a.to_string()),
                                pos);
    }
  }

  static LoopLevel level(const Arg& a) {
    static const std::regex re(R"(L(-1|[0-9]{1,6}))");
    std::smatch m;
    if (!std::regex_match(a.text, m, re)) {
      throw ScheduleSyntaxError(fmt::format("malformed level token '{}'", a.text), a.pos);
    }
    if (m[1] == "-1") return LoopLevel::innermost();
    return LoopLevel::depth(std::stoi(m[1]));
  }

  static std::int64_t factor(const Arg& a) {
    static const std::regex re(R"([0-9]{1,9})");
    if (!std::regex_match(a.text, re)) {
      throw ScheduleSyntaxError(fmt::format("non-integer factor '{}'", a.text), a.pos);
    }
    std::int64_t v = std::stoll(a.text);
    if (v < 2) throw ScheduleSyntaxError(fmt::format("factor {} must be at least 2", v), a.pos);
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string print_command(const Transformation& t) { return std::visit(Printer{}, t); }

std::string print_schedule(const Schedule& s) {
  std::string out;
  for (std::size_t i = 0; i < s.commands.size(); ++i) {
    if (i) out += "+";
    out += print_command(s.commands[i]);
  }
  return out;
}

Schedule parse_schedule(std::string_view text) { return ScheduleParser(text).run(); }

LLMResponse parse_response(std::string_view message) {
  static constexpr std::string_view open = "<schedule>";
  static constexpr std::string_view close = "</schedule>";
  LLMResponse r;
  std::size_t o = message.find(open);
  if (o != std::string_view::npos) {
    r.reasoning = trim(message.substr(0, o));
    std::size_t start = o + open.size();
    std::size_t c = message.find(close, start);
    if (c == std::string_view::npos) {
      r.payload = LLMResponse::Payload::Unparseable;
      r.reason = "unterminated schedule tag";
      return r;
    }
    std::string_view inner = message.substr(start, c - start);
    if (inner.find(open) != std::string_view::npos) {
      r.payload = LLMResponse::Payload::Unparseable;
      r.reason = "nested schedule tag";
      return r;
    }
    r.schedule_text = std::string(inner);
    if (trim(inner) == kQuitToken) {
      r.payload = LLMResponse::Payload::Quit;
    } else {
      r.payload = LLMResponse::Payload::Schedule;
    }
    return r;
  }
  std::size_t q = message.find(kQuitToken);
  if (q != std::string_view::npos) {
    r.reasoning = trim(message.substr(0, q));
    r.payload = LLMResponse::Payload::Quit;
    return r;
  }
  r.reasoning = trim(message);
  r.payload = LLMResponse::Payload::Unparseable;
  r.reason = message.find(close) != std::string_view::npos ? "closing schedule tag without an opening tag"
                                                           : "no schedule tags found";
  return r;
}

}  // namespace compilot
