#include <charconv>
#include <istream>
#include <ostream>
#include <regex>
#include <string>

#include "bco/runner.hpp"

namespace bco::runner {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("trace line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("trace line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace<double>& trace) {
  std::string line;
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    line.clear();
    line += std::to_string(r.t);
    line += ',';
    for (Eigen::Index i = 0; i < r.x.size(); ++i) {
      if (i) line += ';';
      line += format_double(r.x[i]);
    }
    for (double v : {r.lambda, r.alpha, r.gamma, r.eta, r.loss_plus, r.loss_minus, r.g_at_x, r.g_plus}) {
      line += ',';
      line += format_double(v);
    }
    line += ',';
    line += to_string(r.solver_method);
    line += ',';
    line += format_double(r.solver_gap);
    line += '\n';
    out << line;
  }
}

Trace<double> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("trace: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw SchemaError("trace: unexpected header '" + line + "'");
  Trace<double> trace;
  std::size_t line_no = 1;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 12)
      throw SchemaError("trace line " + std::to_string(line_no) + ": expected 12 fields, got " +
                        std::to_string(fields.size()));
    TraceRecord<double> r;
    r.t = parse_int(fields[0], line_no);
    if (r.t != static_cast<std::int64_t>(trace.size()) + 1)
      throw SchemaError("trace line " + std::to_string(line_no) + ": rounds must run 1, 2, ...");
    const auto xs = split(fields[1], ';');
    if (dim < 0) dim = static_cast<Eigen::Index>(xs.size());
    if (static_cast<Eigen::Index>(xs.size()) != dim)
      throw SchemaError("trace line " + std::to_string(line_no) + ": dimension changed");
    r.x.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) r.x[i] = parse_double(xs[static_cast<std::size_t>(i)], line_no);
    r.lambda = parse_double(fields[2], line_no);
    r.alpha = parse_double(fields[3], line_no);
    r.gamma = parse_double(fields[4], line_no);
    r.eta = parse_double(fields[5], line_no);
    r.loss_plus = parse_double(fields[6], line_no);
    r.loss_minus = parse_double(fields[7], line_no);
    r.g_at_x = parse_double(fields[8], line_no);
    r.g_plus = parse_double(fields[9], line_no);
    if (fields[10] == "closed_form") r.solver_method = SolveMethod::closed_form;
    else if (fields[10] == "iterative") r.solver_method = SolveMethod::iterative;
    else throw SchemaError("trace line " + std::to_string(line_no) + ": unknown solver method");
    r.solver_gap = parse_double(fields[11], line_no);
    trace.push_back(std::move(r));
  }
  return trace;
}

std::string trace_file_name(const TraceKey& key) {
  return "trace_" + std::string(to_string(key.algorithm)) + "_seed" + std::to_string(key.seed) + "_T" +
         std::to_string(key.horizon) + ".csv";
}

std::optional<TraceKey> parse_trace_file_name(std::string_view name) {
  static const std::regex pattern(R"(trace_([a-z_]+)_seed([0-9]+)_T([0-9]+)\.csv)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(name.begin(), name.end(), m, pattern)) return std::nullopt;
  const auto alg = parse_algorithm(m[1].str());
  if (!alg) return std::nullopt;
  try {
    return TraceKey{*alg, std::stoull(m[2].str()), std::stoll(m[3].str())};
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

}  // namespace bco::runner
