// command-line driver for the virtual-state spectroscopy simulator
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include <vss/config.hpp>
#include <vss/jsa.hpp>
#include <vss/pipeline.hpp>

namespace {

int run(const std::string& subcommand, vss::ExperimentConfig config,
        vss::PipelineOptions po) {
  using namespace vss;

  if (subcommand == "jsa") {
    std::filesystem::create_directories(po.out_dir);
    const FrequencyGrid gs = config.signal_grid();
    const JointSpectralAmplitude jsa = build_jsa(gs, gs, config.crystal(), config.pump());
    if (jsa.edge_warning)
      std::fprintf(stderr,
                   "[vss] warning: amplitude still carries %.2e of its peak at the grid "
                   "edge; consider a wider grid\n",
                   jsa.edge_ratio);
    save_jsa(po.out_dir / "jsa.bin", jsa);
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["fingerprint"] = config_fingerprint(config);
    j["norm"] = jsa.norm;
    j["edge_warning"] = jsa.edge_warning;
    j["edge_ratio"] = jsa.edge_ratio;
    j["grid_n"] = config.grid_n;
    j["half_span_rad_s"] = config.grid_half_span_rad_s;
    write_text_file(po.out_dir / "jsa.json", j.dump(2) + "\n");
    std::printf("wrote %s and %s\n", (po.out_dir / "jsa.bin").c_str(),
                (po.out_dir / "jsa.json").c_str());
    return 0;
  }

  if (subcommand == "trace") {
    po.until = RunUntil::trace;
    po.single_chirp = true;
  } else if (subcommand == "spectrum") {
    po.until = RunUntil::spectrum;
    po.single_chirp = true;
  } else if (subcommand == "sweep-chirp") {
    po.until = RunUntil::variance;
  } else if (subcommand == "identify") {
    po.until = RunUntil::identify;
  } else if (subcommand == "baseline-lengths") {
    po.until = RunUntil::source;
    po.with_baseline = true;
  } else if (subcommand == "all") {
    po.until = RunUntil::identify;
    po.with_baseline = !config.baseline_lengths_m.empty();
    po.write_manifest = true;
  }

  const PipelineResult r = run_pipeline(config, po);

  if (po.until >= RunUntil::identify) {
    for (const auto& w : r.identification.warnings)
      std::fprintf(stderr, "[vss] warning: %s\n", w.c_str());
    std::printf("most chirp-stable beats and their level assignments:\n");
    for (const auto& b : r.identification.branches) {
      if (b.degenerate)
        std::printf("  beat %.6f eV  R=%.3e  level %.6f eV (degenerate midpoint)\n",
                    b.beat_energy_eV, b.relative_variance, b.upper_eV);
      else
        std::printf("  beat %.6f eV  R=%.3e  level %.6f eV or %.6f eV\n", b.beat_energy_eV,
                    b.relative_variance, b.upper_eV, b.lower_eV);
    }
  }
  std::printf("outputs in %s\n", po.out_dir.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"entangled two-photon-absorption virtual-state spectroscopy simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string cache_dir;
  int threads = 0;
  bool pair_only = false;
  bool emit_gnuplot = false;
  std::uint64_t seed = 0;
  bool quiet = false;

  app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--threads", threads, "worker threads (0 = hardware default)");
  app.add_flag("--pair-only", pair_only, "drop the exchange channel (pair channel only)");
  app.add_flag("--emit-gnuplot", emit_gnuplot, "write a gnuplot script next to the CSVs");
  app.add_option("--cache", cache_dir,
                 "cache directory (default: $VSS_CACHE_DIR, else <out>/cache)");
  auto* seed_opt =
      app.add_option("--seed", seed, "override the demo-system seed from the config");
  app.add_flag("--quiet", quiet, "suppress progress output on stderr");

  app.add_subcommand("jsa", "build and store the joint spectral amplitude");
  app.add_subcommand("trace", "delay trace for the first configured chirp");
  app.add_subcommand("spectrum", "beat spectrum of the first configured chirp");
  app.add_subcommand("sweep-chirp", "chirp ensemble with relative-variance ranking");
  app.add_subcommand("identify", "full analysis up to level identification");
  app.add_subcommand("baseline-lengths", "crystal-length-averaged baseline spectrum");
  app.add_subcommand("all", "everything the config describes, plus a run manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    vss::ExperimentConfig config = vss::load_config(config_path);
    if (pair_only) config.include_exchange = false;
    if (seed_opt->count() > 0) {
      if (!config.demo.enabled)
        throw vss::ConfigError("--seed is only meaningful for configs with a matter.demo block");
      config.demo.seed = seed;
    }

    vss::PipelineOptions po;
    po.out_dir = out_dir;
    po.cache_dir = cache_dir;
    po.threads = threads;
    po.emit_gnuplot = emit_gnuplot;
    po.progress = !quiet;
    return run(app.get_subcommands().front()->get_name(), std::move(config), std::move(po));
  } catch (const vss::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const vss::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const vss::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
