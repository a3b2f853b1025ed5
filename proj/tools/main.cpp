// mixbeam CLI: scene simulation, streaming enhancement, and evaluation.
//
//   mixbeam simulate --spec s.json --out dir/
//   mixbeam enhance  --in x.wav --config c.json --out y.wav [--noise n.wav] [--report r.json]
//   mixbeam evaluate --scene dir/ --config c.json --out m.json [--csv rows.csv]
//
// Exit codes: 0 ok, 1 usage/config error, 2 data error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mixbeam/enhancer.hpp"
#include "mixbeam/metrics.hpp"
#include "mixbeam/scene.hpp"
#include "mixbeam/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixbeam;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());  // carries byte position of the violation
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

Position parse_position(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw DataError(what + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string spec_path;
  std::string out_dir;
};

SceneSpec parse_scene_spec(const json& j) {
  SceneSpec spec;
  if (!j.is_object()) throw DataError("scene spec: top level must be an object");

  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("t60")) spec.t60 = j["t60"].get<double>();
  if (j.contains("rmnr_db")) spec.rmnr_db = j["rmnr_db"].get<double>();
  if (j.contains("sample_rate")) spec.sample_rate = j["sample_rate"].get<double>();
  if (j.contains("early_ms")) spec.early_ms = j["early_ms"].get<double>();
  if (j.contains("noise_num_waves")) spec.noise_num_waves = j["noise_num_waves"].get<int>();
  if (j.contains("mic_geometry")) {
    spec.mic_geometry.clear();
    for (const auto& p : j["mic_geometry"]) spec.mic_geometry.push_back(parse_position(p, "mic_geometry entry"));
  }

  const double duration = j.value("duration_s", 10.0);
  if (j.contains("sources")) {
    int index = 0;
    for (const auto& s : j["sources"]) {
      SceneSource src;
      src.position = parse_position(s.at("position"), "source position");
      if (s.contains("wav")) {
        const Audio a = read_wav(s["wav"].get<std::string>());
        if (a.num_channels() != 1) throw DataError("source wav must be mono: " + s["wav"].get<std::string>());
        src.signal.assign(a.samples.data(), a.samples.data() + a.num_samples());
      } else {
        const std::uint64_t synth_seed = s.value("synth_seed", spec.seed * 1000 + index + 1);
        src.signal = speech_like_source(duration, spec.sample_rate, synth_seed);
      }
      spec.sources.push_back(std::move(src));
      ++index;
    }
  } else {
    // two speakers 1 m from the array on opposite sides
    spec.sources.push_back(
        {{1.0, 0.0, 0.0}, speech_like_source(duration, spec.sample_rate, spec.seed * 1000 + 1), -1});
    spec.sources.push_back(
        {{-1.0, 0.0, 0.0}, speech_like_source(duration, spec.sample_rate, spec.seed * 1000 + 2), -1});
  }
  return spec;
}

int cmd_simulate(const SimulateArgs& args) {
  const json spec_json = load_json(args.spec_path);
  const SceneSpec spec = parse_scene_spec(spec_json);
  const SceneOutput scene = render_scene(spec);

  fs::create_directories(args.out_dir);
  const auto path = [&](const std::string& name) { return (fs::path(args.out_dir) / name).string(); };

  write_wav(path("captured.wav"), scene.captured);
  write_wav(path("desired.wav"), scene.desired);
  write_wav(path("interference.wav"), scene.interference);
  std::vector<std::string> per_source_files;
  for (std::size_t n = 0; n < scene.per_source_desired.size(); ++n) {
    per_source_files.push_back("source_" + std::to_string(n) + "_desired.wav");
    write_wav(path(per_source_files.back()), scene.per_source_desired[n]);
  }

  // calibration noise: a separate realization of the same diffuse field at
  // the scene's noise level, for interference-SCM estimation
  Audio calib = make_diffuse_noise(spec.mic_geometry, 5.0, spec.sample_rate, spec.seed + 0xCA11B,
                                   spec.noise_num_waves);
  calib.samples *= scene.noise_gain;
  write_wav(path("noise_calibration.wav"), calib);

  json manifest;
  manifest["sample_rate"] = spec.sample_rate;
  manifest["seed"] = spec.seed;
  manifest["t60"] = spec.t60;
  manifest["early_ms"] = spec.early_ms;
  manifest["rmnr_db_target"] = std::isfinite(spec.rmnr_db) ? json(spec.rmnr_db) : json();
  manifest["rmnr_db_measured"] = std::isfinite(scene.measured_rmnr_db) ? json(scene.measured_rmnr_db) : json();
  manifest["rmnr_measurement"] = "full_file";
  manifest["noise_gain"] = scene.noise_gain;
  manifest["num_channels"] = scene.captured.num_channels();
  manifest["num_sources"] = scene.per_source_desired.size();
  manifest["delta"] = static_cast<long>(std::llround(0.05 * spec.sample_rate));
  for (const auto& p : spec.mic_geometry) manifest["mic_geometry"].push_back({p[0], p[1], p[2]});
  manifest["files"] = {{"captured", "captured.wav"},
                       {"desired", "desired.wav"},
                       {"interference", "interference.wav"},
                       {"per_source_desired", per_source_files},
                       {"noise_calibration", "noise_calibration.wav"}};
  for (const auto& act : scene.activity) manifest["activity"].push_back(act);
  write_text(path("manifest.json"), manifest.dump(2));

  std::cout << "scene written to " << args.out_dir << " (" << scene.captured.num_channels()
            << " channels, " << scene.captured.num_samples() << " samples";
  if (std::isfinite(scene.measured_rmnr_db)) std::cout << ", RMNR " << scene.measured_rmnr_db << " dB";
  std::cout << ")\n";
  return 0;
}

// ----------------------------------------------------------------- enhance

struct EnhanceArgs {
  std::string in_path;
  std::string config_path;
  std::string out_path;
  std::string noise_path;
  std::string report_path;
  bool all_channels = false;
  std::string beamformer_override;
  double gamma_override = -1.0;
};

RunConfig load_config_with_overrides(const std::string& path, const std::string& bf_override,
                                     double gamma_override) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  if (!bf_override.empty()) {
    json patch = json::parse(run_config_to_json(cfg));
    patch["beamformer"] = bf_override;
    cfg = run_config_from_json(patch.dump());
  }
  if (gamma_override >= 0.0) cfg.gamma = gamma_override;
  cfg.validate();
  return cfg;
}

int cmd_enhance(const EnhanceArgs& args) {
  const RunConfig cfg =
      load_config_with_overrides(args.config_path, args.beamformer_override, args.gamma_override);
  const Audio x = read_wav(args.in_path);

  std::vector<HermitianScm> noise_scms;
  const std::vector<HermitianScm>* scms_ptr = nullptr;
  if (!args.noise_path.empty()) {
    const Audio noise = read_wav(args.noise_path);
    if (noise.num_channels() != x.num_channels())
      throw DataError("noise file channel count does not match the input");
    noise_scms = init_from_noise(noise, cfg.stft);
    scms_ptr = &noise_scms;
  }

  const EnhanceResult res = enhance_audio(cfg, x, scms_ptr);

  Audio out = res.enhanced;
  if (!args.all_channels) {
    Audio first(out.sample_rate, out.num_samples(), 1);
    first.samples.col(0) = out.samples.col(0);
    out = std::move(first);
  }
  write_wav(args.out_path, out);
  if (!args.report_path.empty()) write_text(args.report_path, timing_report_to_json(res.timing));

  std::cout << "enhanced " << res.timing.frames << " frames with " << to_string(cfg.beamformer)
            << ": mean " << res.timing.mean_ms << " ms/frame, p99 " << res.timing.p99_ms
            << " ms (budget " << res.timing.hop_budget_ms << " ms), realtime factor "
            << res.timing.realtime_factor << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scene_dir;
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::string beamformer_override;
  double gamma_override = -1.0;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const RunConfig cfg =
      load_config_with_overrides(args.config_path, args.beamformer_override, args.gamma_override);

  const fs::path dir(args.scene_dir);
  if (!fs::exists(dir / "manifest.json")) throw DataError("scene manifest not found in " + args.scene_dir);
  const json manifest = load_json((dir / "manifest.json").string());

  const auto file_of = [&](const std::string& key) {
    if (!manifest.contains("files") || !manifest["files"].contains(key))
      throw DataError("manifest is missing ground-truth component '" + key + "'");
    return (dir / manifest["files"][key].get<std::string>()).string();
  };

  const Audio captured = read_wav(file_of("captured"));
  const Audio desired = read_wav(file_of("desired"));
  const Audio interference = read_wav(file_of("interference"));
  std::vector<Audio> per_source;
  for (const auto& name : manifest["files"]["per_source_desired"])
    per_source.push_back(read_wav((dir / name.get<std::string>()).string()));

  std::vector<HermitianScm> noise_scms;
  const std::vector<HermitianScm>* scms_ptr = nullptr;
  if (cfg.noise_scm_mode == NoiseScmMode::PrecomputedFromFile &&
      cfg.beamformer != BeamformerKind::Identity) {
    noise_scms = init_from_noise(read_wav(file_of("noise_calibration")), cfg.stft);
    scms_ptr = &noise_scms;
  }

  const ScenePassResult pass = enhance_with_components(cfg, captured, desired, interference, scms_ptr);
  const Eigen::Index delta = manifest.value("delta", 800L);
  const SegmentSet segs = active_segments(per_source, delta);
  const MetricReport rep =
      metric_report(pass.d_hat, pass.v_hat, desired, interference, segs, !args.csv_path.empty());

  json out;
  out["beamformer"] = to_string(cfg.beamformer);
  out["noise_scm_mode"] = cfg.noise_scm_mode == NoiseScmMode::OnlineSpp ? "online_spp" : "precomputed_from_file";
  out["segdir_db"] = rep.segdir_db;
  out["segddr_db"] = rep.segddr_db;
  out["segdir_observed_db"] = rep.segdir_observed_db;
  out["segdir_improvement_db"] = rep.segdir_improvement_db;
  out["num_active_segments"] = segs.active.size();
  out["frames"] = pass.timing.frames;
  out["timing"] = json::parse(timing_report_to_json(pass.timing));
  write_text(args.out_path, out.dump(2));

  if (!args.csv_path.empty()) {
    std::ostringstream csv;
    csv << "segment,dir_db,ddr_db\n";
    for (const auto& row : rep.per_segment)
      csv << row.tau << "," << row.dir_db << "," << row.ddr_db << "\n";
    write_text(args.csv_path, csv.str());
  }

  std::cout << to_string(cfg.beamformer) << ": SegDIR " << rep.segdir_db << " dB (improvement "
            << rep.segdir_improvement_db << " dB), SegDDR " << rep.segddr_db << " dB over "
            << segs.active.size() << " active segments\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixbeam: low-latency online multichannel speech-mixture enhancement"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "render a synthetic noisy reverberant scene");
  sim->add_option("--spec", sim_args.spec_path, "scene spec JSON")->required();
  sim->add_option("--out", sim_args.out_dir, "output directory")->required();

  EnhanceArgs enh_args;
  auto* enh = app.add_subcommand("enhance", "enhance a multichannel WAV");
  enh->add_option("--in", enh_args.in_path, "input WAV")->required();
  enh->add_option("--config", enh_args.config_path, "run config JSON");
  enh->add_option("--out", enh_args.out_path, "output WAV")->required();
  enh->add_option("--noise", enh_args.noise_path, "noise-only WAV for the interference SCM");
  enh->add_option("--report", enh_args.report_path, "write the timing report JSON here");
  enh->add_flag("--all-channels", enh_args.all_channels, "write all M outputs, not just channel 1");
  enh->add_option("--beamformer", enh_args.beamformer_override,
                  "override: mod_pmwf | gev_mvdr | ur_mwf | identity");
  enh->add_option("--gamma", enh_args.gamma_override, "override the tradeoff gamma");

  EvaluateArgs eval_args;
  auto* eva = app.add_subcommand("evaluate", "run a beamformer over a scene and score it");
  eva->add_option("--scene", eval_args.scene_dir, "scene directory from simulate")->required();
  eva->add_option("--config", eval_args.config_path, "run config JSON");
  eva->add_option("--out", eval_args.out_path, "metric report JSON")->required();
  eva->add_option("--csv", eval_args.csv_path, "optional per-segment CSV");
  eva->add_option("--beamformer", eval_args.beamformer_override,
                  "override: mod_pmwf | gev_mvdr | ur_mwf | identity");
  eva->add_option("--gamma", eval_args.gamma_override, "override the tradeoff gamma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (enh->parsed()) return cmd_enhance(enh_args);
    if (eva->parsed()) return cmd_evaluate(eval_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
