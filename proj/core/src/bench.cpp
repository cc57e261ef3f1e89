#include "anchorflow/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "anchorflow/csv.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/svg.hpp"

namespace af {

namespace {

struct Cell {
  Method method;
  GridPoint point;
  int n_avg;
};

std::vector<Cell> build_cells(const BenchSpec& spec) {
  std::vector<Cell> cells;
  for (Method m : spec.methods)
    for (const GridPoint& p : spec.resolved_sweep())
      for (int n : spec.resolved_n_avg()) cells.push_back(Cell{m, p, n});
  return cells;
}

EditConfig cell_config(const BenchSpec& spec, const Cell& cell) {
  EditConfig cfg = spec.base;
  cfg.method = cell.method;
  cfg.n_max = cell.point.n_max;
  cfg.s_tar = cell.point.s_tar;
  cfg.n_avg = cell.n_avg;
  return cfg;
}

struct SampleOutcome {
  bool failed = false;
  Vec x_src;
  Vec edited;
  MetricsRow row;
  std::int64_t runtime_us = 0;
};

std::string cell_stem(const Cell& cell) {
  char star[32];
  std::snprintf(star, sizeof(star), "%g", cell.point.s_tar);
  std::ostringstream os;
  os << method_name(cell.method) << "_nmax" << cell.point.n_max << "_star" << star << "_navg"
     << cell.n_avg;
  return os.str();
}

std::string make_row(const BenchSpec& spec, const Cell& cell, int sample_idx,
                     const SampleOutcome& s) {
  std::ostringstream os;
  os << method_name(cell.method) << ',' << cell.point.n_max << ','
     << csv::format_real(cell.point.s_tar) << ',' << cell.n_avg << ','
     << csv::format_u64(spec.base.seed) << ',' << sample_idx << ','
     << csv::format_real(s.x_src[0]) << ',' << csv::format_real(s.x_src[1]) << ',';
  if (s.failed) {
    os << "nan,nan,nan,0,nan,nan,nan,0";
  } else {
    os << csv::format_real(s.edited[0]) << ',' << csv::format_real(s.edited[1]) << ','
       << csv::format_real(s.row.identity_error) << ',' << (s.row.assignment_consistent ? 1 : 0)
       << ',' << csv::format_real(s.row.target_loglik) << ','
       << csv::format_real(s.row.source_loglik) << ',' << csv::format_real(s.row.cancel_ratio)
       << ',' << csv::format_int(s.runtime_us);
  }
  return os.str();
}

std::filesystem::path pick_run_dir(const BenchSpec& spec,
                                   const std::optional<std::filesystem::path>& fixed_dir) {
  if (fixed_dir) return *fixed_dir;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
  const std::filesystem::path base = std::filesystem::path(spec.out_dir);
  std::filesystem::path dir = base / (std::string(stamp) + "-" + spec.name);
  for (int suffix = 2; std::filesystem::exists(dir); ++suffix)
    dir = base / (std::string(stamp) + "-" + spec.name + "-" + std::to_string(suffix));
  return dir;
}

}  // namespace

RunRegistry run_bench(const BenchSpec& spec, int threads, std::ostream* log,
                      const std::optional<std::filesystem::path>& fixed_dir) {
  spec.validate();
  const EditTask task = spec.resolve_task();
  if (task.dim() != 2)
    throw ConfigError("run_bench: the results schema and plots require d = 2");
  const GmmOracleField field(task);

  RunRegistry registry;
  registry.dir = pick_run_dir(spec, fixed_dir);
  std::filesystem::create_directories(registry.plots_dir());

  {
    std::ofstream snap(registry.config_snapshot(), std::ios::binary);
    snap << snapshot_config(spec);
  }

  const std::vector<Cell> cells = build_cells(spec);
  const int samples = spec.samples;
  const std::size_t total = cells.size() * static_cast<std::size_t>(samples);
  std::vector<SampleOutcome> outcomes(total);

  // Shared source draws: sample s is the same latent in every cell, so
  // methods and grid points are compared paired.
  std::vector<Vec> sources(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    rng::CounterStream stream(spec.base.seed, rng::kTagSourceDraw,
                              static_cast<std::uint64_t>(s), 0);
    sources[static_cast<std::size_t>(s)] = sample_mixture(task.source, stream);
  }
  std::vector<Vec> target_ref(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    rng::CounterStream stream(spec.base.seed, rng::kTagTargetRef,
                              static_cast<std::uint64_t>(s), 0);
    target_ref[static_cast<std::size_t>(s)] = sample_mixture(task.target, stream);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      const Cell& cell = cells[idx / static_cast<std::size_t>(samples)];
      const int sample_idx = static_cast<int>(idx % static_cast<std::size_t>(samples));
      SampleOutcome& out = outcomes[idx];
      out.x_src = sources[static_cast<std::size_t>(sample_idx)];
      try {
        const EditConfig cfg = cell_config(spec, cell);
        const EditResult result =
            run_edit(field, task, cfg, out.x_src, static_cast<std::uint64_t>(sample_idx));
        out.edited = result.edited;
        out.row = score_sample(task, out.x_src, result);
        out.runtime_us =
            spec.record_timing ? static_cast<std::int64_t>(result.wall_seconds * 1e6) : 0;
      } catch (const NumericError&) {
        out.failed = true;
      }
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // results.csv in (method, grid, n_avg, sample) order, whatever the
  // completion order was.
  {
    std::ofstream os(registry.results_csv(), std::ios::binary);
    os << csv::kResultsHeader << '\n';
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (int s = 0; s < samples; ++s) {
        const std::size_t idx = c * static_cast<std::size_t>(samples) + static_cast<std::size_t>(s);
        os << make_row(spec, cells[c], s, outcomes[idx]) << '\n';
      }
  }

  {
    std::ofstream os(registry.summary_csv(), std::ios::binary);
    os << "method,n_max,s_tar,n_avg,samples,failures,mean_identity_err,assign_rate,"
          "mean_target_loglik,mean_source_loglik,mean_cancel_ratio,energy_to_target_ref,"
          "mean_runtime_us\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::vector<MetricsRow> rows;
      std::vector<Vec> edited;
      std::int64_t failures = 0;
      double runtime_sum = 0.0;
      for (int s = 0; s < samples; ++s) {
        const SampleOutcome& out = outcomes[c * static_cast<std::size_t>(samples) +
                                            static_cast<std::size_t>(s)];
        if (out.failed) {
          ++failures;
          continue;
        }
        rows.push_back(out.row);
        edited.push_back(out.edited);
        runtime_sum += static_cast<double>(out.runtime_us);
      }
      const MetricsReport report = MetricsReport::build(std::move(rows), edited, target_ref);
      const auto n_ok = static_cast<double>(samples) - static_cast<double>(failures);
      os << method_name(cells[c].method) << ',' << cells[c].point.n_max << ','
         << csv::format_real(cells[c].point.s_tar) << ',' << cells[c].n_avg << ',' << samples
         << ',' << failures << ',' << csv::format_real(report.mean_identity_error) << ','
         << csv::format_real(report.assignment_rate) << ','
         << csv::format_real(report.mean_target_loglik) << ','
         << csv::format_real(report.mean_source_loglik) << ','
         << csv::format_real(report.mean_cancel_ratio) << ','
         << csv::format_real(report.energy_to_target_ref) << ','
         << csv::format_real(n_ok > 0 ? runtime_sum / n_ok : 0.0) << '\n';
    }
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<ScatterBatch> batches(3);
    batches[0].label = "source";
    batches[0].color = "#9e9e9e";
    batches[1].label = std::string("edited (") + method_name(cells[c].method) + ")";
    batches[1].color = "#d62728";
    batches[2].label = "target ref";
    batches[2].color = "#1f77b4";
    batches[2].outlined = true;
    for (int s = 0; s < samples; ++s) {
      const SampleOutcome& out =
          outcomes[c * static_cast<std::size_t>(samples) + static_cast<std::size_t>(s)];
      batches[0].points.push_back(out.x_src);
      if (!out.failed) batches[1].points.push_back(out.edited);
      batches[2].points.push_back(target_ref[static_cast<std::size_t>(s)]);
    }
    render_scatter_svg(batches, (registry.plots_dir() / (cell_stem(cells[c]) + ".svg")).string());
  }

  if (log)
    *log << "bench: " << cells.size() << " cells x " << samples << " samples -> "
         << registry.dir.string() << '\n';
  return registry;
}

void render_plots_from_results(const BenchSpec& spec, const std::filesystem::path& results_csv,
                               const std::filesystem::path& plots_dir) {
  const EditTask task = spec.resolve_task();
  std::ifstream is(results_csv);
  if (!is) throw ConfigError("plot: cannot open " + results_csv.string());
  std::string line;
  if (!std::getline(is, line) || line != csv::kResultsHeader)
    throw ConfigError("plot: unexpected results.csv header in " + results_csv.string());

  struct CellPoints {
    std::vector<Vec> src, edit;
  };
  std::map<std::string, CellPoints> by_cell;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 16)
      throw ConfigError("plot: malformed row at " + results_csv.string() + ":" +
                        std::to_string(lineno));
    char star[32];
    std::snprintf(star, sizeof(star), "%g", std::stod(fields[2]));
    const std::string stem =
        fields[0] + "_nmax" + fields[1] + "_star" + star + "_navg" + fields[3];
    CellPoints& cp = by_cell[stem];
    Vec src(2), edit(2);
    src << std::stod(fields[6]), std::stod(fields[7]);
    cp.src.push_back(src);
    const double e0 = std::stod(fields[8]);
    const double e1 = std::stod(fields[9]);
    if (std::isfinite(e0) && std::isfinite(e1)) {
      edit << e0, e1;
      cp.edit.push_back(edit);
    }
  }

  std::vector<Vec> target_ref;
  const int samples = by_cell.empty() ? 0 : static_cast<int>(by_cell.begin()->second.src.size());
  for (int s = 0; s < samples; ++s) {
    rng::CounterStream stream(spec.base.seed, rng::kTagTargetRef,
                              static_cast<std::uint64_t>(s), 0);
    target_ref.push_back(sample_mixture(task.target, stream));
  }

  std::filesystem::create_directories(plots_dir);
  for (const auto& [stem, cp] : by_cell) {
    std::vector<ScatterBatch> batches(3);
    batches[0] = {"source", cp.src, "#9e9e9e", false};
    batches[1] = {"edited", cp.edit, "#d62728", false};
    batches[2] = {"target ref", target_ref, "#1f77b4", true};
    render_scatter_svg(batches, (plots_dir / (stem + ".svg")).string());
  }
}

}  // namespace af
