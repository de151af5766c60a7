// Command-line front end. Every subcommand builds an ExperimentConfig and hands it to the
// library; nothing numeric happens here.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fraclab/experiment.hpp"

namespace {

using nlohmann::json;

void print_summary(const fraclab::RunResult& r) {
  const json& err = r.report.contains("error") ? r.report["error"] : json();
  if (err.is_object()) {
    std::cerr << fmt::format("{}: {} ({}): {}\n", r.name, r.report.value("status", ""), err.value("code", ""),
                             err.value("message", ""));
  } else {
    std::cout << fmt::format("{}: {}{}\n", r.name, r.report.value("status", ""),
                             r.verdict.empty() ? "" : ", " + r.verdict);
  }
}

int finish(const fraclab::RunResult& r, const std::filesystem::path& out) {
  fraclab::write_outputs(r, out);
  print_summary(r);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral fractional operators, extensions and comparison experiments"};
  app.set_version_flag("--version", std::string(fraclab::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("--config", config_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");

  std::string corpus_dir;
  int threads = 1;
  auto* corpus = app.add_subcommand("corpus", "run every *.json in a directory");
  corpus->add_option("--config", corpus_dir, "scenario directory")->required();
  corpus->add_option("--out", out_dir, "output directory");
  corpus->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));

  double s = 0.5, c = 4.0, r0 = 1.0, rmax = 256.0;
  int n = 1;
  std::optional<int> windows;
  auto* radial = app.add_subcommand("radial", "zero scan of the radial equation");
  radial->add_option("--s", s, "fractional order in (0, 1]");
  radial->add_option("--c", c, "constant potential");
  radial->add_option("--n", n, "space dimension");
  radial->add_option("--r0", r0, "left end of the scan");
  radial->add_option("--rmax", rmax, "right end of the scan");
  radial->add_option("--windows", windows, "dyadic windows (default: as many as fit)");
  radial->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fraclab::exit_validation;
  }

  try {
    if (*run) {
      if (!seed) return finish(fraclab::run_file(config_path), out_dir);
      fraclab::ExperimentConfig config;
      try {
        config = fraclab::ExperimentConfig::load(config_path);
      } catch (const std::exception&) {
        return finish(fraclab::run_file(config_path), out_dir);  // reports the load error
      }
      config.seed = *seed;
      config.raw["seed"] = *seed;
      const fraclab::RunResult r = fraclab::run(config);
      return finish(r, out_dir);
    }
    if (*corpus) {
      const fraclab::CorpusResult result = fraclab::run_corpus(corpus_dir, threads);
      std::filesystem::create_directories(out_dir);
      for (const auto& r : result.runs) {
        fraclab::write_outputs(r, out_dir);
        print_summary(r);
      }
      std::ofstream(std::filesystem::path(out_dir) / "summary.csv") << result.summary_csv;
      if (result.runs.empty()) std::cerr << fmt::format("no *.json scenarios in {}\n", corpus_dir);
      return result.exit_code;
    }
    json j = {{"name", "radial"}, {"command", "radial"}, {"s", s}, {"c", c}, {"dimension", n}, {"r0", r0},
              {"rmax", rmax}};
    if (windows) j["windows"] = *windows;
    fraclab::RunResult r;
    try {
      r = fraclab::run(fraclab::ExperimentConfig::from_json(j, "radial"));
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return fraclab::exit_validation;
    }
    return finish(r, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fraclab::exit_accuracy;
  }
}
