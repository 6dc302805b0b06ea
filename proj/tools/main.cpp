// wpc: command-line front end for the wave-optics reconstruction toolkit.
// Subcommands: simulate, reconstruct, filter, evaluate, bench. All errors
// leave a machine-readable JSON object on stderr; exit codes are documented
// in the README.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "wpc/compensation.hpp"
#include "wpc/errors.hpp"
#include "wpc/field.hpp"
#include "wpc/fresnel.hpp"
#include "wpc/io.hpp"
#include "wpc/metrics.hpp"
#include "wpc/rng.hpp"
#include "wpc/speckle.hpp"
#include "wpc/triwcp.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wpc;

constexpr const char* kVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

int exit_code_for(const std::string& code) {
  if (code == errc::usage_error) return 2;
  if (code == errc::config_error) return 3;
  if (code == errc::io_error) return 4;
  if (code == errc::format_error) return 5;
  return 6;  // domain errors: invalid_argument, shape_mismatch, non_finite
}

void emit_error(const std::string& code, const std::string& message) {
  const json e = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << e.dump() << "\n";
}

std::string generator_tag() { return std::string("wpc ") + kVersion; }

// --- config plumbing ------------------------------------------------------

json load_config(const std::string& path) {
  const std::string text = io::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(errc::config_error, "'" + path + "': invalid JSON: " + e.what());
  }
}

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    fail(errc::config_error, "missing config key '" + where + "'");
  return j.at(key);
}

double get_num(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_number()) fail(errc::config_error, "config key '" + where + "' must be a number");
  return v.get<double>();
}

double get_num_or(const json& j, const std::string& key, const std::string& where, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return get_num(j, key, where);
}

int get_int(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_number_integer()) fail(errc::config_error, "config key '" + where + "' must be an integer");
  return v.get<int>();
}

std::string get_str(const json& j, const std::string& key, const std::string& where) {
  const json& v = require_key(j, key, where);
  if (!v.is_string()) fail(errc::config_error, "config key '" + where + "' must be a string");
  return v.get<std::string>();
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(errc::io_error, "cannot create output directory '" + out + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json base_output(const json& config_echo) {
  return json{{"schema_version", kSchemaVersion},
              {"generator", generator_tag()},
              {"config", config_echo}};
}

double json_safe(double v) { return std::isfinite(v) ? v : 0.0; }

// Metrics may carry NaN sentinels; JSON gets an explicit null instead.
json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

// --- simulate ---------------------------------------------------------

speckle::NoiseModel parse_noise(const json& scene) {
  if (!scene.contains("noise")) return speckle::NoNoise{};
  const json& n = scene.at("noise");
  const std::string model = get_str(n, "model", "scene.noise.model");
  if (model == "none") return speckle::NoNoise{};
  if (model == "gaussian") return speckle::GaussianNoise{get_num(n, "sigma", "scene.noise.sigma")};
  if (model == "poisson") return speckle::PoissonNoise{get_num(n, "scale", "scene.noise.scale")};
  fail(errc::config_error, "config key 'scene.noise.model' must be none, gaussian, or poisson");
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 const uint64_t* seed_override) {
  json config = load_config(config_path);
  const json& scene = require_key(config, "scene", "scene");

  speckle::SceneConfig cfg;
  cfg.width = get_int(scene, "width", "scene.width");
  cfg.height = get_int(scene, "height", "scene.height");
  cfg.pitch = get_num(scene, "pitch_m", "scene.pitch_m");
  cfg.wavelength = get_num(scene, "wavelength_m", "scene.wavelength_m");
  cfg.z1 = get_num(scene, "z1_m", "scene.z1_m");
  cfg.z2 = get_num(scene, "z2_m", "scene.z2_m");
  cfg.seed = scene.contains("seed") ? scene.at("seed").get<uint64_t>() : 0;
  if (seed_override) cfg.seed = *seed_override;

  if (scene.contains("screen")) {
    const json& s = scene.at("screen");
    cfg.screen_phase_std = get_num(s, "phase_std_rad", "scene.screen.phase_std_rad");
    cfg.screen_correlation_length =
        get_num(s, "correlation_length_m", "scene.screen.correlation_length_m");
  }
  cfg.noise = parse_noise(scene);

  const json& object = require_key(scene, "object", "scene.object");
  if (object.contains("mask_path")) {
    cfg.object_mask = io::load_mask(get_str(object, "mask_path", "scene.object.mask_path"));
  } else {
    const double coverage = get_num(object, "coverage", "scene.object.coverage");
    cfg.object_mask = speckle::make_object_mask(cfg.width, cfg.height, coverage,
                                                hash_seed(cfg.seed, 0x0b7ec7));
  }

  const speckle::SimInstance sim = speckle::simulate(cfg);

  ensure_out_dir(out);
  config["scene"]["seed"] = cfg.seed;  // echo the effective seed
  io::save_field(join(out, "ground_truth.wpcf"), sim.ground_truth_field);
  io::save_field(join(out, "intensity.wpcf"),
                 from_real(sim.intensity, cfg.pitch, cfg.wavelength));
  io::save_pgm(join(out, "intensity.pgm"), metrics::normalize_minmax(sim.intensity));
  io::save_pgm(join(out, "object_mask.pgm"), cfg.object_mask);

  json sidecar = base_output(config);
  if (std::isfinite(sim.snr_db))
    sidecar["snr_db"] = sim.snr_db;
  else
    sidecar["snr_db"] = "inf";  // noiseless sentinel
  io::write_text_file(join(out, "scene.json"), sidecar.dump(2) + "\n");
  return 0;
}

// --- reconstruct ----------------------------------------------------------

SolverConfig parse_solver(const json& config) {
  SolverConfig cfg;
  if (!config.contains("solver")) return cfg;
  const json& s = config.at("solver");
  cfg.beta1 = get_num_or(s, "beta1", "solver.beta1", cfg.beta1);
  cfg.beta2 = get_num_or(s, "beta2", "solver.beta2", cfg.beta2);
  cfg.epsilon = get_num_or(s, "epsilon", "solver.epsilon", cfg.epsilon);
  cfg.smoothing_sigma_px =
      get_num_or(s, "smoothing_sigma_px", "solver.smoothing_sigma_px", cfg.smoothing_sigma_px);
  if (s.contains("smoothing_radius_px"))
    cfg.smoothing_radius_px = get_int(s, "smoothing_radius_px", "solver.smoothing_radius_px");
  if (s.contains("gamma")) {
    const json& g = s.at("gamma");
    if (!g.is_array() || g.size() != 3)
      fail(errc::config_error, "config key 'solver.gamma' must be an array of 3 numbers");
    for (int i = 0; i < 3; ++i) {
      if (!g[i].is_number())
        fail(errc::config_error, "config key 'solver.gamma' must be an array of 3 numbers");
      cfg.gamma[static_cast<size_t>(i)] = g[i].get<double>();
    }
  }
  if (s.contains("momentum_source")) {
    const std::string m = get_str(s, "momentum_source", "solver.momentum_source");
    if (m == "admissible_gradient")
      cfg.momentum_source = MomentumSource::kAdmissibleGradient;
    else if (m == "residual_only")
      cfg.momentum_source = MomentumSource::kResidualOnly;
    else
      fail(errc::config_error,
           "config key 'solver.momentum_source' must be admissible_gradient or residual_only");
  }
  if (s.contains("project_intermediates")) {
    const json& p = s.at("project_intermediates");
    if (!p.is_boolean())
      fail(errc::config_error, "config key 'solver.project_intermediates' must be a boolean");
    cfg.project_intermediates = p.get<bool>();
  }
  return cfg;
}

int cmd_reconstruct(const std::string& config_path, const std::string& out) {
  const json config = load_config(config_path);

  const json& input = require_key(config, "input", "input");
  const std::string intensity_path = get_str(input, "intensity_path", "input.intensity_path");
  std::string ext = fs::path(intensity_path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  const json& prop = require_key(config, "propagation", "propagation");
  const double wavelength = get_num(prop, "wavelength_m", "propagation.wavelength_m");
  const double distance = get_num(prop, "distance_m", "propagation.distance_m");
  const PropagationSpec spec = make_spec(wavelength, distance);

  RealGrid intensity;
  double pitch = 0.0;
  if (ext == ".wpcf") {
    const ComplexField f = io::load_field(intensity_path);
    if ((f.data.imag() != 0.0).any())
      fail(errc::format_error,
           "'" + intensity_path + "': intensity fields must have zero imaginary parts");
    intensity = f.data.real();
    pitch = f.pitch;
  } else if (ext == ".pgm") {
    intensity = io::load_pgm(intensity_path);
    pitch = get_num(require_key(config, "grid", "grid"), "pitch_m", "grid.pitch_m");
  } else {
    fail(errc::config_error, "'" + intensity_path + "': intensity must be .wpcf or .pgm");
  }
  if ((intensity < 0.0).any())
    fail(errc::invalid_argument, "measured intensity must be non-negative");

  const SolverConfig solver = parse_solver(config);

  // Warm start: back-propagate the measured amplitude with zero phase.
  const RealGrid amplitude = intensity.sqrt();
  const ComplexField psi0 =
      adjoint_propagate(from_real(amplitude, pitch, wavelength), spec);

  IntensityObjective objective;
  objective.measured = intensity;
  objective.spec = spec;
  objective.pitch = pitch;
  const SolveResult result = run_triwcp(psi0, objective, solver);

  ensure_out_dir(out);
  io::save_field(join(out, "psi_init.wpcf"), psi0);
  io::save_pgm(join(out, "initializer.pgm"), metrics::normalize_minmax(magnitude_squared(psi0)));
  io::save_field(join(out, "psi_final.wpcf"), result.psi_final);
  io::save_pgm(join(out, "reconstruction.pgm"),
               metrics::normalize_minmax(magnitude_squared(result.psi_final)));

  json log = base_output(config);
  log["initial_objective"] = json_safe(result.initial_objective);
  json phases = json::array();
  for (int t = 0; t < 3; ++t)
    phases.push_back({{"phase", t + 1}, {"objective", result.phase_objectives[static_cast<size_t>(t)]}});
  log["phases"] = phases;
  log["final_objective"] = result.final_objective;
  io::write_text_file(join(out, "reconstruct_log.json"), log.dump(2) + "\n");
  return 0;
}

// --- filter -----------------------------------------------------------

int cmd_filter(const std::string& config_path, const std::string& out, bool dump_stages) {
  const json config = load_config(config_path);

  const json& input = require_key(config, "input", "input");
  const comp::FeatureMap low = io::load_feature_map(get_str(input, "low_path", "input.low_path"));
  const comp::FeatureMap high = input.contains("high_path")
                                    ? io::load_feature_map(get_str(input, "high_path", "input.high_path"))
                                    : low;

  const json& wj = require_key(config, "weights", "weights");
  io::WeightsBundle bundle;
  if (wj.contains("path")) {
    bundle = io::load_weights(get_str(wj, "path", "weights.path"));
  } else {
    const int channels = get_int(wj, "channels", "weights.channels");
    const auto seed = static_cast<uint64_t>(require_key(wj, "seed", "weights.seed").get<uint64_t>());
    bundle.weights = comp::seeded_weights(channels, seed);
    bundle.attention = comp::seeded_attention(channels, seed + 1);
  }
  if (bundle.weights.channels != low.channel_count())
    fail(errc::shape_mismatch,
         "weights expect " + std::to_string(bundle.weights.channels) +
             " channels (tensor 'theta_1' is " + std::to_string(bundle.weights.channels) + "x" +
             std::to_string(bundle.weights.channels) + ") but the input has " +
             std::to_string(low.channel_count()));
  if (high.channel_count() != low.channel_count())
    fail(errc::shape_mismatch, "low and high feature maps must have equal channel counts");

  comp::PipelineTrace trace;
  const comp::FeatureMap final_map =
      comp::run_pipeline(low, high, bundle.weights, bundle.attention,
                         dump_stages ? &trace : nullptr);

  ensure_out_dir(out);
  io::save_feature_map(join(out, "f_final.wpcf"), final_map);
  json log = base_output(config);
  json stage_names = json::array();
  if (dump_stages) {
    for (const auto& [name, stage] : trace.stages) {
      io::save_feature_map(join(out, name + ".wpcf"), stage);
      stage_names.push_back(name);
    }
  }
  log["stages"] = stage_names;
  io::write_text_file(join(out, "filter_log.json"), log.dump(2) + "\n");
  return 0;
}

// --- evaluate ---------------------------------------------------------

std::map<std::string, std::string> scan_masks(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(errc::io_error, "'" + dir + "' is not a directory");
  std::map<std::string, std::string> stems;  // sorted => deterministic
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext != ".pgm" && ext != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (stems.count(stem))
      fail(errc::format_error, "'" + dir + "': duplicate mask name '" + stem + "'");
    stems[stem] = entry.path().string();
  }
  return stems;
}

int cmd_evaluate(const std::string& pred_dir, const std::string& gt_dir, const std::string& out,
                 bool normalize) {
  const auto preds = scan_masks(pred_dir);
  const auto gts = scan_masks(gt_dir);

  std::vector<std::string> matched, unmatched_pred, unmatched_gt;
  for (const auto& [stem, path] : preds) {
    (void)path;
    if (gts.count(stem))
      matched.push_back(stem);
    else
      unmatched_pred.push_back(stem);
  }
  for (const auto& [stem, path] : gts) {
    (void)path;
    if (!preds.count(stem)) unmatched_gt.push_back(stem);
  }
  if (matched.empty())
    fail(errc::invalid_argument,
         "no matching mask filenames between '" + pred_dir + "' and '" + gt_dir + "'");

  std::vector<metrics::EvalReport> reports;
  json pairs = json::array();
  for (const std::string& stem : matched) {
    const RealGrid pred = io::load_mask(preds.at(stem));
    const RealGrid gt = io::load_mask(gts.at(stem));
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
      fail(errc::shape_mismatch, "mask '" + stem + "' has mismatched shapes between directories");
    const metrics::EvalReport r = metrics::evaluate_pair(pred, gt, normalize);
    reports.push_back(r);
    pairs.push_back({{"name", stem},
                     {"mae", r.mae},
                     {"max_f", num_or_null(r.max_f)},
                     {"mean_f", num_or_null(r.mean_f)},
                     {"weighted_f", num_or_null(r.weighted_f)},
                     {"s_measure", num_or_null(r.s_measure)},
                     {"e_measure", num_or_null(r.e_measure)},
                     {"valid", r.valid}});
  }
  const metrics::AggregateReport agg = metrics::aggregate(reports);

  json config_echo = {{"pred_dir", pred_dir}, {"gt_dir", gt_dir}, {"normalize", normalize}};
  json report = base_output(config_echo);
  report["pairs"] = pairs;
  report["aggregate"] = {{"pairs_total", agg.pairs_total},
                         {"pairs_valid", agg.pairs_valid},
                         {"mae", agg.mean_mae},
                         {"max_f", num_or_null(agg.mean_max_f)},
                         {"mean_f", num_or_null(agg.mean_mean_f)},
                         {"weighted_f", num_or_null(agg.mean_weighted_f)},
                         {"s_measure", num_or_null(agg.mean_s_measure)},
                         {"e_measure", num_or_null(agg.mean_e_measure)}};
  report["unmatched_pred"] = unmatched_pred;
  report["unmatched_gt"] = unmatched_gt;

  ensure_out_dir(out);
  io::write_text_file(join(out, "report.json"), report.dump(2) + "\n");
  std::cout << report["aggregate"].dump() << "\n";
  return 0;
}

// --- bench ------------------------------------------------------------

int cmd_bench(const std::string& out) {
  using clock = std::chrono::steady_clock;
  auto time_ms = [](auto&& fn) {
    const auto start = clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  json timings;
  Rng rng(7);
  ComplexField field = make_field(256, 256, 1e-5, 633e-9);
  for (Eigen::Index r = 0; r < field.data.rows(); ++r)
    for (Eigen::Index c = 0; c < field.data.cols(); ++c)
      field.data(r, c) = Complex(rng.normal(), rng.normal());
  const PropagationSpec spec = make_spec(633e-9, 0.002);

  timings["fft_256"] = time_ms([&] { (void)forward_spectrum(field); });
  timings["propagate_256"] = time_ms([&] { (void)propagate(field, spec); });
  timings["project_256"] = time_ms([&] { (void)project_subspace(field, spec); });

  speckle::SceneConfig scene;
  scene.width = scene.height = 64;
  scene.pitch = 1e-5;
  scene.wavelength = 633e-9;
  scene.z1 = scene.z2 = 0.002;
  scene.object_mask = speckle::make_object_mask(64, 64, 0.2, 7);
  scene.screen_phase_std = 0.3;
  scene.screen_correlation_length = 5e-5;
  scene.seed = 7;
  speckle::SimInstance sim;
  timings["simulate_64"] = time_ms([&] { sim = speckle::simulate(scene); });

  const PropagationSpec total = make_spec(scene.wavelength, scene.z1 + scene.z2);
  IntensityObjective objective{sim.intensity, total, scene.pitch};
  const ComplexField psi0 =
      adjoint_propagate(from_real(sim.intensity.sqrt(), scene.pitch, scene.wavelength), total);
  timings["triwcp_64"] = time_ms([&] { (void)run_triwcp(psi0, objective, SolverConfig{}); });

  comp::FeatureMap low = comp::make_feature_map(4, 64, 64);
  Rng frng(11);
  for (RealGrid& ch : low.channels)
    for (Eigen::Index r = 0; r < ch.rows(); ++r)
      for (Eigen::Index c = 0; c < ch.cols(); ++c) ch(r, c) = frng.normal();
  const comp::BranchWeights w = comp::seeded_weights(4, 3);
  const comp::AttentionConfig attn = comp::seeded_attention(4, 4);
  timings["pipeline_c4_64"] = time_ms([&] { (void)comp::run_pipeline(low, low, w, attn); });

  const RealGrid gt = speckle::make_object_mask(64, 64, 0.2, 9);
  const RealGrid pred = metrics::normalize_minmax(sim.intensity);
  timings["evaluate_64"] = time_ms([&] { (void)metrics::evaluate_pair(pred, gt); });

  json report = base_output(json::object());
  report["timings_ms"] = timings;
  ensure_out_dir(out);
  io::write_text_file(join(out, "bench.json"), report.dump(2) + "\n");
  std::cout << timings.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wave-optics reconstruction toolkit"};
  app.set_version_flag("--version", generator_tag());
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", pred_dir, gt_dir;
  uint64_t seed = 0;
  bool seed_given = false, dump_stages = false, no_normalize = false;

  CLI::App* simulate = app.add_subcommand("simulate", "synthesize a speckle observation");
  simulate->add_option("--config", config_path, "scene config JSON")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed, "override the scene seed")->each([&](const std::string&) {
    seed_given = true;
  });

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "run the three-phase solver");
  reconstruct->add_option("--config", config_path, "reconstruction config JSON")->required();
  reconstruct->add_option("--out", out_dir, "output directory");

  CLI::App* filter = app.add_subcommand("filter", "run the frequency-compensation pipeline");
  filter->add_option("--config", config_path, "filter config JSON")->required();
  filter->add_option("--out", out_dir, "output directory");
  filter->add_flag("--dump-stages", dump_stages, "write every intermediate stage");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score prediction masks against ground truth");
  evaluate->add_option("--pred", pred_dir, "prediction mask directory")->required();
  evaluate->add_option("--gt", gt_dir, "ground-truth mask directory")->required();
  evaluate->add_option("--out", out_dir, "output directory");
  evaluate->add_flag("--no-normalize", no_normalize, "skip min-max normalization of predictions");

  CLI::App* bench = app.add_subcommand("bench", "time the core stages");
  bench->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error(wpc::errc::usage_error, e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, seed_given ? &seed : nullptr);
    if (reconstruct->parsed()) return cmd_reconstruct(config_path, out_dir);
    if (filter->parsed()) return cmd_filter(config_path, out_dir, dump_stages);
    if (evaluate->parsed()) return cmd_evaluate(pred_dir, gt_dir, out_dir, !no_normalize);
    if (bench->parsed()) return cmd_bench(out_dir);
  } catch (const wpc::Error& e) {
    emit_error(e.code(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    emit_error("internal_error", e.what());
    return 1;
  }
  return 0;
}
