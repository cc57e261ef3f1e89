#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "anchorflow/bench.hpp"
#include "anchorflow/config.hpp"
#include "anchorflow/csv.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerify = 4;

af::GaussianMixture pick_mixture(const af::EditTask& task, const std::string& which) {
  if (which == "source") return task.source;
  if (which == "target") return task.target;
  if (which == "uncond") return task.uncond;
  throw af::ConfigError("--which must be source, target or uncond");
}

int cmd_sample(const std::string& config, const std::string& which, int count,
               std::uint64_t seed, const std::string& out) {
  af::GaussianMixture gmm = config.empty()
                                ? pick_mixture(af::paired_two_mode(), which)
                                : af::load_mixture(config);
  std::ostringstream os;
  os << "x_0";
  for (int i = 1; i < gmm.dim(); ++i) os << ",x_" << i;
  os << '\n';
  for (int s = 0; s < count; ++s) {
    af::rng::CounterStream stream(seed, af::rng::kTagSourceDraw,
                                  static_cast<std::uint64_t>(s), 0);
    const af::Vec x = af::sample_mixture(gmm, stream);
    for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << af::csv::format_real(x[i]);
    os << '\n';
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw af::ConfigError("cannot open output file " + out);
    f << os.str();
  }
  return kExitOk;
}

int cmd_edit(const std::string& config, const std::string& method, int sample_idx,
             std::optional<std::uint64_t> seed, const std::string& out) {
  af::BenchSpec spec = config.empty() ? af::BenchSpec{} : af::load_config(config);
  if (!method.empty()) {
    const auto m = af::parse_method(method);
    if (!m) throw af::ConfigError("unknown method '" + method + "'");
    spec.base.method = *m;
  }
  if (seed) spec.base.seed = *seed;
  spec.base.validate();

  const af::EditTask task = spec.resolve_task();
  const af::GmmOracleField field(task);
  af::rng::CounterStream stream(spec.base.seed, af::rng::kTagSourceDraw,
                                static_cast<std::uint64_t>(sample_idx), 0);
  const af::Vec x_src = af::sample_mixture(task.source, stream);
  const af::EditResult result =
      af::run_edit(field, task, spec.base, x_src, static_cast<std::uint64_t>(sample_idx));
  const af::MetricsRow row = af::score_sample(task, x_src, result);

  std::cout << "method: " << af::method_name(spec.base.method) << '\n';
  std::cout << "x_src:";
  for (int i = 0; i < x_src.size(); ++i) std::cout << ' ' << af::csv::format_real(x_src[i]);
  std::cout << "\nedited:";
  for (int i = 0; i < result.edited.size(); ++i)
    std::cout << ' ' << af::csv::format_real(result.edited[i]);
  std::cout << "\nidentity_err: " << af::csv::format_real(row.identity_error)
            << "\nassign_ok: " << (row.assignment_consistent ? 1 : 0)
            << "\ntarget_loglik: " << af::csv::format_real(row.target_loglik)
            << "\nsource_loglik: " << af::csv::format_real(row.source_loglik)
            << "\ncancel_ratio: " << af::csv::format_real(row.cancel_ratio)
            << "\nfield_evals: " << result.field_evals << '\n';

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream traj(std::filesystem::path(out) / "trajectory.csv", std::ios::binary);
    traj << "step,t,x_fe_0,x_fe_1,v_src_0,v_src_1,v_tar_0,v_tar_1,update_0,update_1\n";
    for (const auto& rec : result.trajectory) {
      traj << rec.index << ',' << af::csv::format_real(rec.t);
      auto emit2 = [&](const af::Vec& v) {
        if (v.size() == 2)
          traj << ',' << af::csv::format_real(v[0]) << ',' << af::csv::format_real(v[1]);
        else
          traj << ",nan,nan";
      };
      emit2(rec.x_fe);
      emit2(rec.v_src);
      emit2(rec.v_tar);
      emit2(rec.update);
      traj << '\n';
    }
  }
  return kExitOk;
}

int cmd_bench(const std::string& config, const std::string& out,
              std::optional<std::uint64_t> seed, int threads) {
  af::BenchSpec spec = config.empty() ? af::BenchSpec{} : af::load_config(config);
  if (!out.empty()) spec.out_dir = out;
  if (seed) spec.base.seed = *seed;
  const af::RunRegistry reg = af::run_bench(spec, threads, &std::cout);
  std::cout << "results: " << reg.results_csv().string() << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& out, const std::string& fault) {
  if (!fault.empty()) {
    const auto f = af::parse_fault(fault);
    if (!f) throw af::ConfigError("unknown fault '" + fault + "'");
    af::set_fault(*f);
  }
  const af::VerifyReport report = af::run_verify(nullptr);
  const int status = af::write_verify_report(report, std::cout);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream f(std::filesystem::path(out) / "verify.txt", std::ios::binary);
    af::write_verify_report(report, f);
  }
  return status == 0 ? kExitOk : kExitVerify;
}

int cmd_plot(const std::string& config, const std::string& results, const std::string& out) {
  const af::BenchSpec spec = af::load_config(config);
  const std::filesystem::path results_path =
      results.empty() ? std::filesystem::path(config).parent_path() / "results.csv"
                      : std::filesystem::path(results);
  const std::filesystem::path plots =
      out.empty() ? results_path.parent_path() / "plots" : std::filesystem::path(out);
  af::render_plots_from_results(spec, results_path, plots);
  std::cout << "plots: " << plots.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-matching editing samplers (direct, inversion, flowedit, anchorflow) "
               "with exact Gaussian-mixture oracles"};
  app.require_subcommand(1);

  std::string config, out, which = "source", method, results, fault;
  int count = 100, sample_idx = 0, threads = 1;
  std::optional<std::uint64_t> seed;
  std::uint64_t sample_seed = 0;

  auto* sample = app.add_subcommand("sample", "Draw from a mixture to CSV");
  sample->add_option("--config", config, "Mixture file (weights / mean.k / cov.k)");
  sample->add_option("--which", which, "source|target|uncond of the preset task");
  sample->add_option("--count,-n", count, "Number of draws");
  sample->add_option("--seed", sample_seed, "Stream seed");
  sample->add_option("--out", out, "Output CSV (default stdout)");

  auto* edit = app.add_subcommand("edit", "Run one editing method on one sample");
  edit->add_option("--config", config, "Benchmark config file");
  edit->add_option("--method", method, "direct|inversion|flowedit|anchorflow");
  edit->add_option("--sample-idx", sample_idx, "Sample index for the source draw");
  edit->add_option("--seed", seed, "Override config seed");
  edit->add_option("--out", out, "Directory for trajectory.csv");

  auto* bench = app.add_subcommand("bench", "Run the full method x grid x sample matrix");
  bench->add_option("--config", config, "Benchmark config file");
  bench->add_option("--out", out, "Output directory root (overrides config)");
  bench->add_option("--seed", seed, "Override config seed");
  bench->add_option("--threads", threads, "Worker threads (never changes output bytes)");

  auto* verify = app.add_subcommand("verify", "Run every module invariant check");
  verify->add_option("--out", out, "Directory for verify.txt");
  verify->add_option("--inject-fault", fault,
                     "Seeded fault: anchor-grad-sign|sigma-schedule|shared-rng");

  auto* plot = app.add_subcommand("plot", "Re-render scatter SVGs from a results.csv");
  plot->add_option("--config", config, "config.snapshot of the run")->required();
  plot->add_option("--results", results, "results.csv (default: next to config)");
  plot->add_option("--out", out, "Plot output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(config, which, count, sample_seed, out);
    if (edit->parsed()) return cmd_edit(config, method, sample_idx, seed, out);
    if (bench->parsed()) return cmd_bench(config, out, seed, threads);
    if (verify->parsed()) return cmd_verify(out, fault);
    if (plot->parsed()) return cmd_plot(config, results, out);
  } catch (const af::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const af::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
