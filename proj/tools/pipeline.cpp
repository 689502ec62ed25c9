// Runs a pipeline described by a config file on this machine.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "sealflow/bench/bench.hpp"
#include "sealflow/error.hpp"
#include "sealflow/pipeline/launcher.hpp"

namespace {

using namespace sealflow;

bool validation_error(Errc c) {
  switch (c) {
    case Errc::SyntaxError:
    case Errc::TopologyError:
    case Errc::ModeError:
    case Errc::UnknownTransform:
    case Errc::UnknownStage:
    case Errc::InvalidScale:
    case Errc::CannotScaleSource:
    case Errc::BadEndpoint:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Launch and supervise a streaming pipeline."};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "launch a pipeline and wait for its result");
  std::string spec_path, mode, stats_dir, input, isolation = "thread";
  std::vector<std::string> workers;
  bool realistic = false;
  double timeout_s = 600;
  run->add_option("spec", spec_path, "pipeline config file")->required();
  run->add_option("--mode", mode, "clear, encrypted or enclave (overrides the file)");
  run->add_option("--workers", workers, "stage=N, repeatable");
  run->add_option("--stats-dir", stats_dir, "write per-component throughput CSVs here");
  run->add_option("--input", input, "CSV file for every source (overrides the file)");
  run->add_flag("--realistic-delay", realistic, "sleep for the modeled enclave crossing time");
  run->add_option("--isolation", isolation, "thread or process per component")
      ->check(CLI::IsMember({"thread", "process"}));
  run->add_option("--timeout", timeout_s, "seconds before giving up");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  pipeline::PipelineSpec spec;
  try {
    spec = pipeline::load_spec(spec_path, pipeline::default_registry());
    if (!mode.empty()) spec.mode = pipeline::parse_mode(mode);
    for (const auto& w : workers) {
      const auto eq = w.find('=');
      if (eq == std::string::npos) fail(Errc::SyntaxError, "--workers expects stage=N, got '" + w + "'");
      auto* st = spec.find(w.substr(0, eq));
      if (!st) fail(Errc::UnknownStage, "no stage named '" + w.substr(0, eq) + "'");
      if (st->role == pipeline::Role::Router) fail(Errc::InvalidScale, st->name + ": routers are not replicated");
      std::size_t n = 0;
      try {
        n = std::stoul(w.substr(eq + 1));
      } catch (const std::exception&) {
        fail(Errc::SyntaxError, "bad worker count in '" + w + "'");
      }
      if (n < 1) fail(Errc::InvalidScale, st->name + ": a stage needs at least one worker");
      st->workers = n;
    }
    pipeline::validate(spec, pipeline::default_registry());
  } catch (const Error& e) {
    std::cerr << "pipeline: " << e.what() << std::endl;
    return validation_error(e.code()) || e.code() == Errc::IoFailure ? 2 : 3;
  }

  try {
    pipeline::LaunchOptions options;
    options.input = input;
    options.stats_dir = stats_dir;
    options.realistic_delay = realistic;
    options.isolation = isolation == "process" ? pipeline::Isolation::Process : pipeline::Isolation::Thread;
    auto deployment = pipeline::launch(spec, options);
    const auto report =
        deployment.await_completion(std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000)));

    std::printf("mode %s, completed in %.3f s\n", std::string(pipeline::mode_name(report.mode)).c_str(),
                std::chrono::duration<double>(report.completion_time).count());
    std::printf("%-24s %8s %10s %10s %14s\n", "stage", "workers", "frames_in", "frames_out", "bytes_out");
    for (const auto& st : report.stages)
      std::printf("%-24s %8zu %10llu %10llu %14llu\n", st.name.c_str(), st.components,
                  static_cast<unsigned long long>(st.frames_in), static_cast<unsigned long long>(st.frames_out),
                  static_cast<unsigned long long>(st.bytes_out));
    std::printf("crypto: %llu seal, %llu open, %llu enclave calls, %.3f ms modeled crossing\n",
                static_cast<unsigned long long>(report.encrypt_calls),
                static_cast<unsigned long long>(report.decrypt_calls),
                static_cast<unsigned long long>(report.process_calls), report.simulated_crossing_time.count() / 1e6);
    std::printf("key,count,sum,mean\n");
    for (const auto& [key, acc] : report.result.entries())
      std::printf("%s,%lld,%.17g,%.6f\n", key.c_str(), static_cast<long long>(acc.count), acc.sum,
                  acc.count ? acc.sum / static_cast<double>(acc.count) : 0.0);
    return 0;
  } catch (const Error& e) {
    std::cerr << "pipeline: " << e.what() << std::endl;
    return 3;
  }
}
