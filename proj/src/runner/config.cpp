#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "bco/runner.hpp"

namespace bco::runner {

namespace {

using Scalar = std::variant<std::string, double>;
struct Value {
  bool is_array = false;
  std::vector<Scalar> items;  // a single item unless is_array
  int line = 0;
};

std::string where(int line) { return "line " + std::to_string(line) + ": "; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class LineParser {
 public:
  LineParser(std::string_view s, int line) : s_(s), line_(line) {}

  Value value() {
    Value v;
    v.line = line_;
    skip_space();
    if (peek() == '[') {
      ++pos_;
      v.is_array = true;
      skip_space();
      if (peek() == ']') {
        ++pos_;
      } else {
        for (;;) {
          v.items.push_back(scalar());
          skip_space();
          if (peek() == ',') {
            ++pos_;
            skip_space();
            if (peek() == ']') {  // trailing comma
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          fail("expected ',' or ']' in array");
        }
      }
    } else {
      v.items.push_back(scalar());
    }
    skip_space();
    if (peek() == '#') pos_ = s_.size();
    if (pos_ != s_.size()) fail("unexpected text after value");
    return v;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where(line_) + msg); }

  Scalar scalar() {
    if (peek() == '"') return string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ' ' && s_[pos_] != '\t')
      ++pos_;
    std::string token(s_.substr(start, pos_ - start));
    std::erase(token, '_');
    if (token.empty()) fail("missing value");
    if (token.front() == '+') token.erase(0, 1);
    double out = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    if (ec != std::errc() || ptr != token.data() + token.size())
      fail("cannot parse value '" + token + "'");
    return out;
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char ch = s_[pos_++];
      if (ch == '\\') {
        if (pos_ >= s_.size()) break;
        const char esc = s_[pos_++];
        switch (esc) {
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          default: fail(std::string("unsupported escape \\") + esc);
        }
      }
      out.push_back(ch);
    }
    if (peek() != '"') fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  int line_;
  std::size_t pos_ = 0;
};

using Table = std::map<std::string, std::map<std::string, Value>>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"suite", {"family", "constraint_mode", "dimension", "drift_scale", "radius", "seed"}},
      {"schedule", {"mode", "c", "epsilon", "delta", "xi", "sigma"}},
      {"run", {"algorithm", "seeds", "checkpoints", "output_dir", "penalty_eval_point"}},
  };
  return keys;
}

Table tokenize(std::string_view text) {
  Table table;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) throw ConfigError(where(line_no) + "unterminated section header");
      const auto rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw ConfigError(where(line_no) + "unexpected text after section header");
      section = std::string(trim(line.substr(1, close - 1)));
      if (!schema().contains(section)) throw ConfigError(where(line_no) + "unknown section [" + section + "]");
      if (table.contains(section)) throw ConfigError(where(line_no) + "duplicate section [" + section + "]");
      table[section];
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(where(line_no) + "expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      if (section.empty()) throw ConfigError(where(line_no) + "key '" + key + "' outside any section");
      if (!schema().at(section).contains(key))
        throw ConfigError(where(line_no) + "unknown key '" + key + "' in [" + section + "]");
      auto& entries = table[section];
      if (entries.contains(key)) throw ConfigError(where(line_no) + "duplicate key '" + key + "'");
      entries[key] = LineParser(line.substr(eq + 1), line_no).value();
    }
    if (end == text.size()) break;
  }
  return table;
}

std::string name_of(const std::string& section, const std::string& key) { return section + "." + key; }

const Scalar& single(const Value& v, const std::string& name) {
  if (v.is_array) throw ConfigError(where(v.line) + name + " must not be an array");
  return v.items.front();
}

std::string as_string(const Value& v, const std::string& name) {
  const auto& s = single(v, name);
  if (!std::holds_alternative<std::string>(s)) throw ConfigError(where(v.line) + name + " must be a string");
  return std::get<std::string>(s);
}

double as_number(const Scalar& s, int line, const std::string& name) {
  if (!std::holds_alternative<double>(s)) throw ConfigError(where(line) + name + " must be a number");
  return std::get<double>(s);
}

std::int64_t as_integer(const Scalar& s, int line, const std::string& name) {
  const double d = as_number(s, line, name);
  if (!(std::floor(d) == d) || std::abs(d) > 9007199254740992.0)
    throw ConfigError(where(line) + name + " must be an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t as_unsigned(const Scalar& s, int line, const std::string& name) {
  const auto i = as_integer(s, line, name);
  if (i < 0) throw ConfigError(where(line) + name + " must be nonnegative");
  return static_cast<std::uint64_t>(i);
}

template <typename F>
void with(const Table& t, const std::string& section, const std::string& key, F&& f) {
  const auto s = t.find(section);
  if (s == t.end()) return;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return;
  f(k->second, name_of(section, key));
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(ch);
    }
  }
  return out + "\"";
}

template <typename T, typename F>
std::string array(const std::vector<T>& items, F&& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out + "]";
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string_view to_string(PenaltyEvalPoint p) {
  return p == PenaltyEvalPoint::previous ? "previous" : "current";
}

std::optional<PenaltyEvalPoint> parse_penalty_eval_point(std::string_view s) {
  if (s == "previous") return PenaltyEvalPoint::previous;
  if (s == "current") return PenaltyEvalPoint::current;
  return std::nullopt;
}

std::string_view to_string(ScheduleMode m) {
  return m == ScheduleMode::convex ? "convex" : "strongly_convex";
}

std::optional<ScheduleMode> parse_schedule_mode(std::string_view s) {
  if (s == "convex") return ScheduleMode::convex;
  if (s == "strongly_convex") return ScheduleMode::strongly_convex;
  return std::nullopt;
}

RunConfig parse_config(std::string_view text) {
  const Table t = tokenize(text);
  RunConfig c;

  bool have_family = false;
  with(t, "suite", "family", [&](const Value& v, const std::string& n) {
    const auto s = as_string(v, n);
    const auto f = parse_loss_family(s);
    if (!f) throw ConfigError(where(v.line) + "unknown loss family '" + s + "'");
    c.suite.family = *f;
    have_family = true;
  });
  if (!have_family) throw ConfigError("missing required key suite.family");
  with(t, "suite", "constraint_mode", [&](const Value& v, const std::string& n) {
    const auto s = as_string(v, n);
    const auto m = parse_constraint_mode(s);
    if (!m) throw ConfigError(where(v.line) + "unknown constraint mode '" + s + "'");
    c.suite.constraint_mode = *m;
  });
  with(t, "suite", "dimension", [&](const Value& v, const std::string& n) {
    c.suite.dimension = as_integer(single(v, n), v.line, n);
  });
  with(t, "suite", "drift_scale", [&](const Value& v, const std::string& n) {
    c.suite.drift_scale = as_number(single(v, n), v.line, n);
  });
  with(t, "suite", "radius", [&](const Value& v, const std::string& n) {
    c.suite.radius = as_number(single(v, n), v.line, n);
  });
  with(t, "suite", "seed", [&](const Value& v, const std::string& n) {
    c.suite.seed = as_unsigned(single(v, n), v.line, n);
  });

  with(t, "schedule", "mode", [&](const Value& v, const std::string& n) {
    const auto s = as_string(v, n);
    const auto m = parse_schedule_mode(s);
    if (!m) throw ConfigError(where(v.line) + "unknown schedule mode '" + s + "'");
    c.mode = *m;
  });
  with(t, "schedule", "c", [&](const Value& v, const std::string& n) { c.c = as_number(single(v, n), v.line, n); });
  with(t, "schedule", "epsilon", [&](const Value& v, const std::string& n) {
    c.epsilon = as_number(single(v, n), v.line, n);
  });
  with(t, "schedule", "delta", [&](const Value& v, const std::string& n) {
    c.delta = as_number(single(v, n), v.line, n);
  });
  with(t, "schedule", "xi", [&](const Value& v, const std::string& n) { c.xi = as_number(single(v, n), v.line, n); });
  with(t, "schedule", "sigma", [&](const Value& v, const std::string& n) {
    c.sigma = as_number(single(v, n), v.line, n);
  });

  with(t, "run", "algorithm", [&](const Value& v, const std::string&) {
    c.algorithms.clear();
    for (const auto& item : v.items) {
      if (!std::holds_alternative<std::string>(item)) throw ConfigError(where(v.line) + "run.algorithm must be a string or array of strings");
      const auto& s = std::get<std::string>(item);
      const auto a = parse_algorithm(s);
      if (!a) throw ConfigError(where(v.line) + "unknown algorithm '" + s + "'");
      c.algorithms.push_back(*a);
    }
  });
  with(t, "run", "seeds", [&](const Value& v, const std::string& n) {
    c.seeds.clear();
    for (const auto& item : v.items) c.seeds.push_back(as_unsigned(item, v.line, n));
  });
  with(t, "run", "checkpoints", [&](const Value& v, const std::string& n) {
    c.checkpoints.clear();
    for (const auto& item : v.items) c.checkpoints.push_back(as_integer(item, v.line, n));
  });
  with(t, "run", "output_dir", [&](const Value& v, const std::string& n) { c.output_dir = as_string(v, n); });
  with(t, "run", "penalty_eval_point", [&](const Value& v, const std::string& n) {
    const auto s = as_string(v, n);
    const auto p = parse_penalty_eval_point(s);
    if (!p) throw ConfigError(where(v.line) + "unknown penalty_eval_point '" + s + "'");
    c.penalty_eval_point = *p;
  });
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[suite]\n"
      << "family = " << quoted(to_string(c.suite.family)) << "\n"
      << "constraint_mode = " << quoted(to_string(c.suite.constraint_mode)) << "\n"
      << "dimension = " << c.suite.dimension << "\n"
      << "drift_scale = " << format_double(c.suite.drift_scale) << "\n"
      << "radius = " << format_double(c.suite.radius) << "\n"
      << "seed = " << c.suite.seed << "\n\n"
      << "[schedule]\n"
      << "mode = " << quoted(to_string(c.mode)) << "\n"
      << "c = " << format_double(c.c) << "\n"
      << "epsilon = " << format_double(c.epsilon) << "\n";
  if (c.delta) out << "delta = " << format_double(*c.delta) << "\n";
  if (c.xi) out << "xi = " << format_double(*c.xi) << "\n";
  if (c.sigma) out << "sigma = " << format_double(*c.sigma) << "\n";
  out << "\n[run]\n"
      << "algorithm = " << array(c.algorithms, [](Algorithm a) { return quoted(to_string(a)); }) << "\n"
      << "seeds = " << array(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
      << "checkpoints = " << array(c.checkpoints, [](std::int64_t s) { return std::to_string(s); }) << "\n";
  if (!c.output_dir.empty()) out << "output_dir = " << quoted(c.output_dir) << "\n";
  out << "penalty_eval_point = " << quoted(to_string(c.penalty_eval_point)) << "\n";
  return out.str();
}

ScheduleParams<double> resolve_schedule(const RunConfig& config, std::int64_t horizon,
                                        const Instance& instance) {
  ScheduleParams<double> p;
  p.horizon = horizon;
  p.mode = config.mode;
  p.c = config.c;
  p.epsilon = config.epsilon;
  p.delta = config.delta ? *config.delta : 1.0 / static_cast<double>(horizon);
  p.xi = config.xi ? *config.xi : p.delta / instance.domain.radius();
  if (config.mode == ScheduleMode::strongly_convex) {
    if (config.sigma) p.sigma = *config.sigma;
    else if (instance.strong_convexity > 0) p.sigma = instance.strong_convexity;
  }
  return p;
}

}  // namespace bco::runner
