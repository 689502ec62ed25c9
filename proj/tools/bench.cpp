// Delayed-flights benchmark driver.
#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sealflow/bench/bench.hpp"
#include "sealflow/error.hpp"

namespace {

using namespace sealflow;
namespace fs = std::filesystem;

/// "256", "64K", "1M", "100M" (binary multiples).
std::uint64_t parse_size(std::string text) {
  if (text.empty()) fail(Errc::SyntaxError, "empty size");
  std::uint64_t mult = 1;
  switch (std::toupper(static_cast<unsigned char>(text.back()))) {
    case 'K': mult = 1ull << 10; break;
    case 'M': mult = 1ull << 20; break;
    case 'G': mult = 1ull << 30; break;
    default: break;
  }
  if (mult != 1) text.pop_back();
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v * mult;
  } catch (const std::exception&) {
    fail(Errc::SyntaxError, "bad size '" + text + "'");
  }
}

/// "256..1M" doubles from the low to the high end; "a,b,c" lists sizes.
std::vector<std::uint64_t> parse_sizes(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = parse_size(text.substr(0, dots)), hi = parse_size(text.substr(dots + 2));
    if (lo == 0 || lo > hi) fail(Errc::SyntaxError, "bad size range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; s *= 2) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(item));
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoFailure, "cannot write " + path);
  out << text;
}

pipeline::PipelineSpec load(const std::string& spec_path, const std::string& mode) {
  const auto m = pipeline::parse_mode(mode);
  if (spec_path.empty()) return bench::delayed_flights_spec(m);
  auto spec = pipeline::load_spec(spec_path, pipeline::default_registry());
  spec.mode = m;
  return spec;
}

/// Resolves "mapper" to "sgx_mapper" when the match is unique.
std::string resolve_stage(const pipeline::PipelineSpec& spec, const std::string& name) {
  if (name.empty() || spec.find(name)) return name;
  std::string hit;
  for (const auto& st : spec.stages)
    if (st.name.find(name) != std::string::npos && st.role != pipeline::Role::Router) {
      if (!hit.empty()) fail(Errc::UnknownStage, "stage '" + name + "' is ambiguous");
      hit = st.name;
    }
  if (hit.empty()) fail(Errc::UnknownStage, "no stage named '" + name + "'");
  return hit;
}

struct DataArgs {
  std::string input;
  std::uint64_t rows = 100000;
  std::size_t carriers = 20;
  std::uint64_t seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--input", input, "flight CSV (generated when absent)");
    cmd->add_option("--rows", rows, "rows to generate");
    cmd->add_option("--carriers", carriers, "carriers to generate");
    cmd->add_option("--seed", seed, "generator seed");
  }

  std::string resolve(const fs::path& dir) const {
    if (!input.empty()) return input;
    fs::create_directories(dir);
    const auto path = dir / ("flights-" + std::to_string(rows) + "-" + std::to_string(seed) + ".csv");
    bench::generate_dataset(path.string(), rows, carriers, seed);
    return path.string();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-flights benchmark: datasets, runs, sweeps and throughput reports."};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic flight dataset");
  std::string gen_out;
  std::uint64_t gen_rows = 100000, gen_seed = 1;
  std::size_t gen_carriers = 20;
  gen->add_option("--rows", gen_rows)->required();
  gen->add_option("--carriers", gen_carriers);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  // ingest
  auto* ing = app.add_subcommand("ingest", "project a BTS on-time CSV to the flight schema");
  std::string ing_in, ing_out;
  ing->add_option("bts_csv", ing_in)->required();
  ing->add_option("--out", ing_out)->required();

  // run
  auto* run = app.add_subcommand("run", "run the delayed-flights pipeline once");
  DataArgs run_data;
  run_data.add(run);
  std::string run_mode = "clear", run_spec, run_out = "bench-out", run_isolation = "thread";
  std::size_t run_workers = 1;
  bool run_realistic = false, run_check = false;
  run->add_option("--mode", run_mode)->check(CLI::IsMember({"clear", "encrypted", "enclave"}));
  run->add_option("--workers", run_workers, "workers per transform stage")->check(CLI::PositiveNumber);
  run->add_option("--spec", run_spec, "pipeline config (default: the built-in delayed-flights topology)");
  run->add_option("--out", run_out, "report directory");
  run->add_option("--isolation", run_isolation)->check(CLI::IsMember({"thread", "process"}));
  run->add_flag("--realistic-delay", run_realistic);
  run->add_flag("--check", run_check, "compare with the sequential oracle");

  // sweep-chunk
  auto* sweep = app.add_subcommand("sweep-chunk", "modeled and measured enclave copy cost per chunk size");
  std::string sweep_sizes = "256..1M", sweep_total = "100M", sweep_out;
  sweep->add_option("--sizes", sweep_sizes, "LO..HI (doubling) or a comma list, K/M suffixes");
  sweep->add_option("--total", sweep_total, "bytes moved per size");
  sweep->add_option("--out", sweep_out, "CSV path (default stdout)");

  // scale-sweep
  auto* scale = app.add_subcommand("scale-sweep", "completion time against worker count");
  DataArgs scale_data;
  scale_data.add(scale);
  std::string scale_stage, scale_counts = "1,2,4", scale_mode = "clear", scale_out, scale_spec;
  int scale_reps = 5;
  bool scale_realistic = false;
  scale->add_option("--stage", scale_stage, "stage to scale (default: every transform stage)");
  scale->add_option("--counts", scale_counts);
  scale->add_option("--reps", scale_reps)->check(CLI::PositiveNumber);
  scale->add_option("--mode", scale_mode)->check(CLI::IsMember({"clear", "encrypted", "enclave"}));
  scale->add_option("--spec", scale_spec);
  scale->add_option("--out", scale_out, "CSV path (default stdout)");
  scale->add_flag("--realistic-delay", scale_realistic);

  // report
  auto* rep = app.add_subcommand("report", "stacked percentiles from throughput CSVs");
  std::string rep_dir, rep_prefix, rep_out;
  rep->add_option("--stats-dir", rep_dir)->required();
  rep->add_option("--node-prefix", rep_prefix, "only nodes whose name starts with this");
  rep->add_option("--out", rep_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      const auto s = bench::generate_dataset(gen_out, gen_rows, gen_carriers, gen_seed);
      std::cout << "wrote " << s.rows << " rows (" << s.delayed << " delayed) to " << gen_out << "\n";
    } else if (*ing) {
      const auto r = bench::ingest_bts(ing_in, ing_out);
      std::cout << "projected " << r.rows << " rows, dropped " << r.dropped << "\n";
    } else if (*run) {
      const fs::path out(run_out);
      const std::string input = run_data.resolve(out);
      pipeline::LaunchOptions options;
      options.stats_dir = (out / "stats").string();
      fs::remove_all(options.stats_dir);
      options.realistic_delay = run_realistic;
      options.ephemeral_ports = true;
      if (!enclave::Key::from_env()) options.key = enclave::Key::random();  // the run owns both ends
      options.isolation = run_isolation == "process" ? pipeline::Isolation::Process : pipeline::Isolation::Thread;
      auto result = bench::pipeline_delayed_flights(input, load(run_spec, run_mode), options, run_workers);

      std::ostringstream csv;
      csv << "carrier,delayed_count,delay_sum,mean_delay\n";
      for (const auto& [carrier, s] : result.result.carriers)
        csv << carrier << ',' << s.delayed_count << ',' << s.delay_sum << ',' << s.mean_delay().value_or(NAN) << '\n';
      emit(csv.str(), (out / "result.csv").string());
      std::ostringstream summary;
      summary << "mode " << run_mode << ", " << run_workers << " worker(s) per stage, completion "
              << std::chrono::duration<double>(result.report.completion_time).count() << " s, "
              << result.result.total_delayed() << " delayed flights over " << result.result.carriers.size()
              << " carriers\n";
      try {
        emit(bench::percentile_csv(bench::collect_metrics(options.stats_dir)), (out / "throughput.csv").string());
      } catch (const Error& e) {
        if (e.code() != Errc::NoSamples) throw;
      }
      if (run_check) {
        std::string why;
        const bool ok = bench::equivalent(result.result, bench::oracle_delayed_flights(input), 1e-9, &why);
        summary << "oracle check: " << (ok ? "equal" : "MISMATCH " + why) << "\n";
        emit(summary.str(), (out / "summary.txt").string());
        std::cout << summary.str();
        return ok ? 0 : 3;
      }
      emit(summary.str(), (out / "summary.txt").string());
      std::cout << summary.str();
    } else if (*sweep) {
      emit(bench::chunk_sweep_csv(bench::sweep_chunk(parse_sizes(sweep_sizes), parse_size(sweep_total))), sweep_out);
    } else if (*scale) {
      auto spec = load(scale_spec, scale_mode);
      const std::string stage = resolve_stage(spec, scale_stage);
      std::vector<std::size_t> counts;
      for (auto c : parse_sizes(scale_counts)) counts.push_back(static_cast<std::size_t>(c));
      pipeline::LaunchOptions options;
      options.realistic_delay = scale_realistic;
      options.ephemeral_ports = true;
      if (!enclave::Key::from_env()) options.key = enclave::Key::random();
      const std::string input = scale_data.resolve(fs::temp_directory_path() / "sealflow-bench");
      emit(bench::scale_sweep_csv(bench::scale_sweep(input, spec, stage, counts, scale_reps, options)), scale_out);
    } else if (*rep) {
      emit(bench::percentile_csv(bench::collect_metrics(rep_dir, rep_prefix)), rep_out);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << std::endl;
    switch (e.code()) {
      case Errc::SyntaxError:
      case Errc::UnknownStage:
      case Errc::CannotScaleSource:
      case Errc::InvalidScale:
      case Errc::ModeError:
        return 2;
      default:
        return 3;
    }
  }
}
