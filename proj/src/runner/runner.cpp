#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bco/runner.hpp"

namespace bco::runner {

namespace fs = std::filesystem;

namespace {

struct KeyLess {
  bool operator()(const TraceKey& a, const TraceKey& b) const {
    return std::tie(a.algorithm, a.seed, a.horizon) < std::tie(b.algorithm, b.seed, b.horizon);
  }
};

using TraceSet = std::map<TraceKey, Trace<double>, KeyLess>;

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out.flush()) throw Error("failed writing " + path.string());
}

SuiteSpec suite_at(const RunConfig& config, std::int64_t horizon) {
  SuiteSpec spec = config.suite;
  spec.horizon = horizon;
  return spec;
}

/// Runs under the pool size; the first exception stops the remaining jobs and is rethrown.
template <typename Job>
void run_jobs(std::size_t count, unsigned parallel, Job&& job) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned k = 0; k < n; ++k) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<SummaryRow> build_summary(const TraceSet& traces, const RunConfig* config, unsigned parallel) {
  if (traces.empty()) throw Error("summarize: no traces");

  // Comparator per horizon, only when the suite is known.
  std::set<std::int64_t> horizons;
  for (const auto& [key, trace] : traces) horizons.insert(key.horizon);
  std::map<std::int64_t, std::pair<Instance, VectorXd>> comparators;
  if (config) {
    const std::vector<std::int64_t> hs(horizons.begin(), horizons.end());
    std::vector<std::optional<std::pair<Instance, VectorXd>>> solved(hs.size());
    run_jobs(hs.size(), parallel, [&](std::size_t i) {
      Instance inst = generate(suite_at(*config, hs[i]));
      VectorXd x_star = offline_optimum(inst).x_star;
      solved[i].emplace(std::move(inst), std::move(x_star));
    });
    for (std::size_t i = 0; i < hs.size(); ++i) comparators.emplace(hs[i], std::move(*solved[i]));
  }

  std::vector<SummaryRow> rows;
  std::map<std::pair<Algorithm, std::int64_t>, std::vector<const SummaryRow*>> groups;
  std::vector<SummaryRow> per_seed;
  per_seed.reserve(traces.size());
  for (const auto& [key, trace] : traces) {
    MetricSeries m;
    if (config) {
      const auto& [inst, x_star] = comparators.at(key.horizon);
      if (!trace.empty() && trace.front().x.size() != inst.dimension())
        throw SchemaError("trace " + trace_file_name(key) + ": dimension does not match the suite");
      m = compute_metrics(trace, inst, &x_star);
    } else {
      m = violation_metrics(trace);
    }
    SummaryRow row;
    row.algorithm = std::string(to_string(key.algorithm));
    row.seed = std::to_string(key.seed);
    row.horizon = key.horizon;
    if (m.with_regret) row.regret = m.final_regret();
    row.v_hard = m.final_v_hard();
    row.v_soft = m.final_v_soft();
    per_seed.push_back(std::move(row));
  }
  {
    std::size_t i = 0;
    for (const auto& [key, trace] : traces) groups[{key.algorithm, key.horizon}].push_back(&per_seed[i++]);
  }

  std::map<Algorithm, std::vector<SummaryRow>> medians;
  for (const auto& [group, members] : groups) {
    SummaryRow row;
    row.algorithm = std::string(to_string(group.first));
    row.seed = "median";
    row.horizon = group.second;
    std::vector<double> r, vh, vs;
    for (const auto* m : members) {
      if (m->regret) r.push_back(*m->regret);
      vh.push_back(m->v_hard);
      vs.push_back(m->v_soft);
    }
    if (r.size() == members.size()) row.regret = median(r);
    row.v_hard = median(vh);
    row.v_soft = median(vs);
    medians[group.first].push_back(std::move(row));
  }

  for (auto& [alg, med] : medians) {
    auto fit = [&](auto get) -> std::optional<GrowthFit> {
      std::vector<std::pair<double, double>> pts;
      for (const auto& row : med) {
        const std::optional<double> v = get(row);
        if (!v || !(*v > 0)) return std::nullopt;
        pts.emplace_back(static_cast<double>(row.horizon), *v);
      }
      if (pts.size() < 3) return std::nullopt;
      return fit_growth_exponent(pts);
    };
    const auto fr = fit([](const SummaryRow& row) { return row.regret; });
    const auto fv = fit([](const SummaryRow& row) { return std::optional<double>(row.v_hard); });
    for (auto& row : med) {
      if (fr) row.slope_regret = fr->slope, row.r2_regret = fr->r_squared;
      if (fv) row.slope_vhard = fv->slope, row.r2_vhard = fv->r_squared;
    }
  }

  // Seed rows first, grouped by algorithm, then that algorithm's median rows.
  std::size_t i = 0;
  for (const auto& [key, trace] : traces) {
    rows.push_back(per_seed[i++]);
    const auto next = std::next(traces.find(key));
    if (next == traces.end() || next->first.algorithm != key.algorithm)
      for (const auto& row : medians.at(key.algorithm)) rows.push_back(row);
  }
  return rows;
}

void check_config(const RunConfig& config) {
  if (config.output_dir.empty()) throw ConfigError("missing required key run.output_dir");
  if (config.algorithms.empty()) throw ConfigError("run.algorithm must name at least one algorithm");
  if (config.seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (config.checkpoints.empty()) throw ConfigError("run.checkpoints must not be empty");
  auto unique = [](auto v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!unique(config.algorithms)) throw ConfigError("run.algorithm lists an algorithm twice");
  if (!unique(config.seeds)) throw ConfigError("run.seeds lists a seed twice");
  if (!unique(config.checkpoints)) throw ConfigError("run.checkpoints lists a horizon twice");
  for (auto T : config.checkpoints)
    if (T < 1) throw ConfigError("run.checkpoints must be positive");
}

}  // namespace

std::vector<SummaryRow> summarize(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("summarize: not a directory: " + dir.string());
  std::optional<RunConfig> config;
  if (fs::exists(dir / "config.toml")) config = load_config(dir / "config.toml");

  TraceSet traces;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto name = path.filename().string();
    if (name.rfind("trace", 0) != 0 || path.extension() != ".csv") continue;
    const auto key = parse_trace_file_name(name);
    if (!key) throw SchemaError("unrecognised trace file name " + name);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    Trace<double> trace;
    try {
      trace = read_trace_csv(in);
    } catch (const SchemaError& e) {
      throw SchemaError(name + ": " + e.what());
    }
    if (static_cast<std::int64_t>(trace.size()) != key->horizon)
      throw SchemaError(name + ": has " + std::to_string(trace.size()) + " rounds, expected " +
                        std::to_string(key->horizon));
    traces.emplace(*key, std::move(trace));
  }
  if (traces.empty()) throw Error("summarize: no trace files in " + dir.string());
  return build_summary(traces, config ? &*config : nullptr, 1);
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.algorithm + ',' + r.seed + ',' + std::to_string(r.horizon) + ',' + opt(r.regret) + ',' +
           format_double(r.v_hard) + ',' + format_double(r.v_soft) + ',' + opt(r.slope_regret) + ',' +
           opt(r.slope_vhard) + ',' + opt(r.r2_regret) + ',' + opt(r.r2_vhard) + '\n';
  }
  return out;
}

void run_experiment(const RunConfig& config, unsigned parallel) {
  check_config(config);

  // Everything is validated before the first run starts.
  std::map<std::int64_t, Instance> instances;
  std::map<std::int64_t, ScheduleParams<double>> schedules;
  for (auto T : config.checkpoints) {
    Instance inst = generate(suite_at(config, T));
    auto params = resolve_schedule(config, T, inst);
    if (config.mode == ScheduleMode::strongly_convex && !params.sigma)
      throw ConfigError("strongly_convex schedule needs sigma, and the " +
                        std::string(to_string(config.suite.family)) + " suite certifies no strong convexity");
    try {
      validate(params, inst.domain);
    } catch (const InvalidSchedule& e) {
      throw ConfigError(std::string("invalid schedule at T=") + std::to_string(T) + ": " + e.what());
    }
    instances.emplace(T, std::move(inst));
    schedules.emplace(T, params);
  }

  const fs::path dir(config.output_dir);
  std::vector<fs::path> created;
  const bool made_dir = !fs::exists(dir);
  std::mutex created_mutex;
  try {
    if (made_dir) fs::create_directories(dir);
    else if (!fs::is_directory(dir)) throw Error("output path is not a directory: " + dir.string());

    std::vector<TraceKey> keys;
    for (auto a : config.algorithms)
      for (auto s : config.seeds)
        for (auto T : config.checkpoints) keys.push_back({a, s, T});

    RunOptions<double> options;
    options.penalty_eval_point = config.penalty_eval_point;
    std::vector<Trace<double>> results(keys.size());
    run_jobs(keys.size(), parallel, [&](std::size_t i) {
      const auto& key = keys[i];
      results[i] = run_algorithm(key.algorithm, instances.at(key.horizon), schedules.at(key.horizon), key.seed,
                                 options);
      std::ostringstream out;
      write_trace_csv(out, results[i]);
      const auto path = dir / trace_file_name(key);
      {
        std::lock_guard lock(created_mutex);
        created.push_back(path);
      }
      write_file(path, out.str());
    });

    created.push_back(dir / "config.toml");
    write_file(dir / "config.toml", serialize_config(config));

    TraceSet traces;
    for (std::size_t i = 0; i < keys.size(); ++i) traces.emplace(keys[i], std::move(results[i]));
    const auto rows = build_summary(traces, &config, parallel);
    created.push_back(dir / "summary.csv");
    write_file(dir / "summary.csv", format_summary_csv(rows));
  } catch (...) {
    std::error_code ec;
    for (const auto& path : created) fs::remove(path, ec);
    if (made_dir) fs::remove_all(dir, ec);
    throw;
  }
}

}  // namespace bco::runner
