// itofflow: simulate, reconstruct, optimize, toy, gradcheck, rerun.
//
// Exit codes: 0 success, 1 verification failure, 2 input error,
// 3 numerical divergence.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "cli_support.hpp"

namespace itof::cli {
namespace {

std::string absolute(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal().string(); }

SensorConfig config_from(const json& params) {
  return SensorConfig::make(params.at("frequencies").get<std::vector<double>>(), params.at("taps").get<int>());
}

RasterMeta meta_for(const SensorConfig& cfg, std::string kind) {
  RasterMeta m;
  m.config = cfg;
  m.kind = std::move(kind);
  return m;
}

MeasurementStack read_stack(const fs::path& raw, RunRecord& rec) {
  rec.input(raw);
  auto rf = read_raster(raw);
  MeasurementStack s{rf.meta.config, std::move(rf.frames)};
  try {
    s.config.validate();
  } catch (const std::exception& e) {
    throw InputError(raw.string() + ": inconsistent sensor layout (" + e.what() + ")");
  }
  if (s.frames.size() != s.config.capture_count())
    throw InputError(raw.string() + ": expected " + std::to_string(s.config.capture_count()) +
                     " frames (4 per frequency), found " + std::to_string(s.frames.size()));
  return s;
}

void write_depth_pngs(RunRecord& rec, const std::string& base, const std::vector<DepthImage>& depth) {
  for (std::size_t fi = 0; fi < depth.size(); ++fi)
    write_png(rec.output(base + "_f" + std::to_string(fi) + ".png"), depth[fi].values, 0.0,
              d_max(depth[fi].frequency_hz));
}

std::vector<Image> depth_frames(const std::vector<DepthImage>& depth) {
  std::vector<Image> out;
  for (const auto& d : depth) out.push_back(d.values);
  return out;
}

// --- simulate ----------------------------------------------------------------

int run_simulate(const json& params, RunRecord& rec) {
  const SceneSpec scene = parse_scene(params.at("scene"));
  const SensorConfig cfg = config_from(params);
  try {
    cfg.validate();
    scene.validate(cfg);
  } catch (const DomainError& e) {
    throw InputError(std::string("scene: ") + e.what());
  }
  const auto noise = params.at("noise").get<double>();
  if (noise < 0) throw InputError("--noise must be non-negative");
  const auto b = simulate_bundle(scene, cfg, params.at("seed").get<std::uint64_t>(), noise);

  write_raster(rec.output("_moving.raw"), b.moving.frames, meta_for(cfg, "measurements"));
  write_raster(rec.output("_static.raw"), b.static_gt.frames, meta_for(cfg, "measurements"));
  write_raster(rec.output("_depth.raw"), depth_frames(b.depth_gt), meta_for(cfg, "depth"));
  write_raster(rec.output("_flows.raw"), flow_frames(b.true_flows), meta_for(cfg, "flow"));
  write_raster(rec.output("_visibility.raw"), mask_frames(b.visibility), meta_for(cfg, "mask"));
  write_depth_pngs(rec, "_depth", b.depth_gt);
  std::cout << "captures " << cfg.capture_count() << ", timesteps " << cfg.timestep_count() << ", "
            << scene.width << "x" << scene.height << "\n";
  return ExitCode::ok;
}

// --- reconstruct ---------------------------------------------------------------

int run_reconstruct(const json& params, RunRecord& rec) {
  const auto stack = read_stack(params.at("stack").get<std::string>(), rec);
  const double eps = params.at("epsilon").get<double>();
  if (eps < 0) throw InputError("--epsilon must be non-negative");
  std::vector<DepthImage> depth;
  for (std::size_t fi = 0; fi < stack.config.frequency_count(); ++fi) {
    const auto* m = &stack.frames[4 * fi];
    const double f = stack.config.frequencies_hz[fi];
    if (stack.config.taps == 2) {
      // Tap differences first; (d0, d1, 0, 0) then carries m0 - m2 and m1 - m3.
      const Image d0 = combine_taps(m[0], m[2]);
      const Image d1 = combine_taps(m[1], m[3]);
      const Image zero(d0.width(), d0.height());
      depth.push_back(reconstruct_depth(d0, d1, zero, zero, f, eps));
    } else {
      depth.push_back(reconstruct_depth(m[0], m[1], m[2], m[3], f, eps));
    }
  }
  write_raster(rec.output(".raw"), depth_frames(depth), meta_for(stack.config, "depth"));
  write_depth_pngs(rec, "", depth);

  if (params.contains("gt") && !params.at("gt").is_null()) {
    const fs::path gt_path = params.at("gt").get<std::string>();
    rec.input(gt_path);
    const auto gt = read_raster(gt_path);
    if (gt.frames.size() != depth.size())
      throw InputError(gt_path.string() + ": expected one depth frame per frequency");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t fi = 0; fi < depth.size(); ++fi) {
      require_same_shape(gt.frames[fi], depth[fi].values, "ground truth");
      // Compare in float32, the precision of the stored ground truth.
      for (std::size_t i = 0; i < gt.frames[fi].size(); ++i, ++n)
        sum += std::abs(static_cast<double>(static_cast<float>(depth[fi].values[i])) - gt.frames[fi][i]);
    }
    std::cout << "mean_abs_error_m " << format_double(sum / static_cast<double>(n), 6) << "\n";
  }
  return ExitCode::ok;
}

// --- optimize ------------------------------------------------------------------

LossWeights weights_from(const json& j) {
  LossWeights w;
  w.smooth = j.at("smooth");
  w.edge = j.at("edge");
  w.sim = j.at("sim");
  w.photo = j.at("photo");
  w.edge_lambda = j.at("edge_lambda");
  w.shift = j.at("shift");
  w.edge_epsilon = j.at("edge_epsilon");
  const auto name = j.at("measure").get<std::string>();
  bool found = false;
  for (auto m : {SimilarityMeasure::l1, SimilarityMeasure::l2, SimilarityMeasure::cost, SimilarityMeasure::cosine})
    if (to_string(m) == name) {
      w.measure = m;
      found = true;
    }
  if (!found) throw InputError("--measure: unknown similarity measure '" + name + "'");
  try {
    w.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  return w;
}

json weights_to_json(const LossWeights& w) {
  return {{"smooth", w.smooth},     {"edge", w.edge},
          {"sim", w.sim},           {"photo", w.photo},
          {"edge_lambda", w.edge_lambda}, {"shift", w.shift},
          {"edge_epsilon", w.edge_epsilon}, {"measure", to_string(w.measure)}};
}

int run_optimize(const json& params, RunRecord& rec) {
  const std::string bundle = params.at("bundle");
  const auto moving = read_stack(bundle + "_moving.raw", rec);
  const auto still = read_stack(bundle + "_static.raw", rec);
  if (!(moving.config == still.config) || !moving.frames.front().same_shape(still.frames.front()))
    throw InputError(bundle + ": moving and static stacks disagree in layout");

  const LossWeights weights = weights_from(params.at("weights"));
  OptimConfig cfg;
  cfg.iterations = params.at("iterations");
  cfg.step = params.at("step");
  cfg.pyramid = params.at("pyramid");
  cfg.unwrap = params.at("unwrap");
  cfg.seed = params.at("seed");
  cfg.method = params.at("method").get<std::string>() == "gd" ? OptimMethod::gd : OptimMethod::adam;
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  const double eps = params.at("epsilon");

  // Weak supervision: the only label is the depth reconstructed from the
  // motion-free captures.
  struct {
    MeasurementStack moving, static_gt;
    std::vector<DepthImage> depth_gt;
  } input{moving, still, reconstruct_stack(still, eps)};
  const FlowProblem problem = make_flow_problem(input, eps);
  const Trace trace = optimize_flows(problem, weights, cfg);

  write_text(rec.output("_trace.csv"), trace_csv(trace.reports));
  if (trace.diverged) {
    std::cerr << "diverged: " << trace.diagnostic << "\n";
    throw Divergence(trace.diagnostic);
  }

  write_raster(rec.output("_flows.raw"), flow_frames(trace.flows), meta_for(moving.config, "flow"));
  MeasurementStack warped{moving.config, {}};
  for (std::size_t c = 0; c < moving.frames.size(); ++c) {
    const int t = moving.config.timestep_layout[c];
    warped.frames.push_back(t == moving.config.reference_timestep
                                ? moving.frames[c]
                                : warp(moving.frames[c], trace.flows[static_cast<std::size_t>(t)]).warped);
  }
  write_raster(rec.output("_warped.raw"), warped.frames, meta_for(moving.config, "warped"));
  const auto depth = reconstruct_stack(warped, eps);
  write_raster(rec.output("_depth.raw"), depth_frames(depth), meta_for(moving.config, "depth"));
  write_depth_pngs(rec, "_depth", depth);

  const auto start = total_loss(problem, std::vector<FlowField>(trace.flows.size(), FlowField(problem.width(), problem.height())),
                                weights, cfg.unwrap)
                         .report;
  const auto final = total_loss(problem, trace.flows, weights, cfg.unwrap).report;
  std::cout << "            L_photo        L_ToF          mask\n"
            << "input   " << std::setw(14) << format_double(start.photo, 6) << " " << std::setw(14)
            << format_double(start.tof, 6) << " " << std::setw(14) << format_double(start.masked_fraction, 6) << "\n"
            << "output  " << std::setw(14) << format_double(final.photo, 6) << " " << std::setw(14)
            << format_double(final.tof, 6) << " " << std::setw(14) << format_double(final.masked_fraction, 6) << "\n";
  return ExitCode::ok;
}

// --- toy -----------------------------------------------------------------------

int run_toy(const json& params, RunRecord& rec) {
  const int w = params.at("width"), h = params.at("height");
  if (w <= 0 || h <= 0) throw InputError("--width and --height must be positive");
  const double f = params.at("frequency");
  if (!(f > 0)) throw InputError("--frequency must be positive");
  const auto toy = make_toy_problem(w, h, params.at("seed").get<std::uint64_t>(), f);
  const std::string mode = params.at("unwrap");
  if (mode != "on" && mode != "off" && mode != "both") throw InputError("--unwrap must be on, off or both");
  const double range = d_max(f);
  const auto layout = SensorConfig::make({f}, 1);

  write_raster(rec.output("_measurements.raw"), {toy.m0, toy.m1, toy.m2, toy.m3}, meta_for(layout, "measurements"));
  write_raster(rec.output("_label.raw"), {toy.label.values}, meta_for(layout, "depth"));
  write_raster(rec.output("_same_branch.raw"), mask_frames({toy.same_branch}), meta_for(layout, "mask"));

  std::vector<Image> errors;
  for (const std::string m : {"on", "off"}) {
    if (mode != "both" && mode != m) continue;
    OptimConfig cfg;
    cfg.method = OptimMethod::gd;
    cfg.iterations = params.at("iterations");
    cfg.step = params.at("step");
    cfg.unwrap = m == "on";
    try {
      cfg.validate();
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
    const auto res = toy_reconstruct_m3(toy.m0, toy.m1, toy.m2, toy.label, cfg);
    write_raster(rec.output("_m3_" + m + ".raw"), {res.m3}, meta_for(layout, "m3"));
    write_raster(rec.output("_error_" + m + ".raw"), {res.error}, meta_for(layout, "error"));
    write_text(rec.output("_trace_" + m + ".csv"), trace_csv(res.trace.reports));
    Mask converged(w, h);
    for (std::size_t i = 0; i < converged.size(); ++i) converged[i] = res.error[i] < 1e-3 * range ? 1 : 0;
    std::cout << "unwrap " << m << ": converged " << format_double(100.0 * res.converged_fraction, 6) << "%";
    if (m == "off") std::cout << ", IoU with same-branch mask " << format_double(mask_iou(converged, toy.same_branch), 6);
    std::cout << "\n";
    errors.push_back(res.error);
  }
  // Error previews share one scale: 0 to d_max / 2, the largest circular error.
  const Image preview = errors.size() == 2 ? side_by_side(errors[0], errors[1], 0.0) : errors[0];
  write_png(rec.output("_error.png"), preview, 0.0, 0.5 * range);
  return ExitCode::ok;
}

// --- gradcheck -----------------------------------------------------------------

int run_gradcheck(const json& params, RunRecord& rec) {
  const int trials = params.at("trials");
  if (trials < 1) throw InputError("--trials must be at least 1");
  const auto entries = gradcheck_all(trials, params.at("seed").get<std::uint64_t>());
  std::ostringstream csv;
  csv << "op,trials,max_rel_error,threshold,passed\n";
  std::cout << std::left << std::setw(22) << "op" << std::right << std::setw(8) << "trials" << std::setw(16)
            << "max_rel_error" << std::setw(12) << "threshold" << "  status\n";
  bool all = true;
  for (const auto& e : entries) {
    std::ostringstream err, thr;
    err << std::scientific << std::setprecision(3) << e.max_rel_error;
    thr << std::scientific << std::setprecision(0) << e.threshold;
    std::cout << std::left << std::setw(22) << e.op << std::right << std::setw(8) << e.trials << std::setw(16)
              << err.str() << std::setw(12) << thr.str() << "  " << (e.passed ? "ok" : "FAIL") << "\n";
    csv << e.op << ',' << e.trials << ',' << err.str() << ',' << thr.str() << ',' << (e.passed ? 1 : 0) << '\n';
    all = all && e.passed;
  }
  write_text(rec.output("_report.csv"), csv.str());
  if (!all) throw VerificationFailure("gradient check failed");
  return ExitCode::ok;
}

// --- dispatch --------------------------------------------------------------------

using Runner = int (*)(const json&, RunRecord&);

Runner runner_for(const std::string& command) {
  if (command == "simulate") return run_simulate;
  if (command == "reconstruct") return run_reconstruct;
  if (command == "optimize") return run_optimize;
  if (command == "toy") return run_toy;
  if (command == "gradcheck") return run_gradcheck;
  throw InputError("unknown command in manifest: " + command);
}

/// Runs a command and writes its manifest. Divergence and verification
/// failures still leave a manifest behind.
int execute(const std::string& command, const json& params, const std::vector<std::string>& argv) {
  RunRecord rec(params.at("output").get<std::string>());
  int code = ExitCode::ok;
  try {
    code = runner_for(command)(params, rec);
  } catch (const Divergence&) {
    write_manifest(rec, command, params, argv);
    throw;
  } catch (const VerificationFailure&) {
    write_manifest(rec, command, params, argv);
    throw;
  }
  write_manifest(rec, command, params, argv);
  return code;
}

int rerun(const std::string& manifest_path, const std::optional<std::string>& output,
          const std::vector<std::string>& argv) {
  json m;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open manifest: " + manifest_path);
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(manifest_path + ": invalid JSON (" + e.what() + ")");
  }
  for (const char* key : {"command", "params", "inputs", "outputs"})
    if (!m.contains(key)) throw InputError(manifest_path + ": missing field '" + key + "'");
  for (const auto& [path, hash] : m.at("inputs").items())
    if (sha256_file(path) != hash.get<std::string>())
      throw InputError("input changed since the recorded run: " + path);
  json params = m.at("params");
  if (output) params["output"] = *output;
  const std::string command = m.at("command");
  int code = ExitCode::ok;
  try {
    code = execute(command, params, argv);
  } catch (const VerificationFailure&) {
    code = ExitCode::verification_failure;
  } catch (const Divergence&) {
    code = ExitCode::divergence;
  }
  RunRecord rec(params.at("output").get<std::string>());
  std::size_t mismatched = 0;
  for (const auto& [suffix, hash] : m.at("outputs").items()) {
    const auto p = rec.path(suffix);
    const bool same = fs::exists(p) && sha256_file(p) == hash.get<std::string>();
    if (!same) {
      std::cerr << "mismatch: " << p.string() << "\n";
      ++mismatched;
    }
  }
  std::cout << "rerun of " << command << ": " << m.at("outputs").size() - mismatched << "/" << m.at("outputs").size()
            << " outputs identical\n";
  if (mismatched > 0) return ExitCode::verification_failure;
  return code;
}

}  // namespace
}  // namespace itof::cli

int main(int argc, char** argv) {
  using namespace itof;
  using namespace itof::cli;
  std::vector<std::string> args(argv + 1, argv + argc);

  CLI::App app{"Weakly-supervised flow estimation for indirect time-of-flight captures"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Render a moving capture bundle from a scene description");
  std::string scene_path, sim_out;
  std::vector<double> freqs{20e6};
  int taps = 1;
  std::uint64_t sim_seed = 0;
  double noise = 0.0;
  sim->add_option("scene", scene_path, "Scene JSON")->required();
  sim->add_option("--frequencies", freqs, "Modulation frequencies in Hz")->delimiter(',')->capture_default_str();
  sim->add_option("--taps", taps, "Taps per pixel")->check(CLI::IsMember({1, 2, 4}))->capture_default_str();
  sim->add_option("--seed", sim_seed, "Noise seed")->capture_default_str();
  sim->add_option("--noise", noise, "Shot-noise variance per unit signal")->capture_default_str();
  sim->add_option("-o,--output", sim_out, "Output prefix")->required();

  // reconstruct
  auto* rc = app.add_subcommand("reconstruct", "Reconstruct wrapped depth from a measurement stack");
  std::string stack_path, rc_out, gt_path;
  double rc_eps = PhysicalConstants::default_epsilon;
  rc->add_option("stack", stack_path, "Measurement stack (.raw)")->required();
  rc->add_option("--epsilon", rc_eps, "Stabilizer in the denominator")->capture_default_str();
  rc->add_option("--gt", gt_path, "Ground-truth depth (.raw) to compare against");
  rc->add_option("-o,--output", rc_out, "Output depth file (.raw)")->required();

  // optimize
  auto* opt = app.add_subcommand("optimize", "Estimate per-timestep flows for a bundle");
  std::string bundle, opt_out, method = "adam";
  LossWeights w;
  std::string measure = "cosine";
  OptimConfig ocfg;
  std::string unwrap_opt = "on";
  double opt_eps = PhysicalConstants::default_epsilon;
  opt->add_option("bundle", bundle, "Bundle prefix (reads <prefix>_moving.raw and <prefix>_static.raw)")->required();
  opt->add_option("--smooth", w.smooth, "Weight of the smoothness loss")->capture_default_str();
  opt->add_option("--edge", w.edge, "Weight of the edge loss")->capture_default_str();
  opt->add_option("--sim", w.sim, "Weight of the similarity loss")->capture_default_str();
  opt->add_option("--photo", w.photo, "Weight of the photometric loss")->capture_default_str();
  opt->add_option("--edge-lambda", w.edge_lambda, "Edge sensitivity of the smoothness weight")->capture_default_str();
  opt->add_option("--shift", w.shift, "Shift s of the edge loss")->capture_default_str();
  opt->add_option("--edge-epsilon", w.edge_epsilon, "Epsilon of the edge weight")->capture_default_str();
  opt->add_option("--measure", measure, "Similarity measure")
      ->check(CLI::IsMember({"l1", "l2", "cost", "cosine"}))
      ->capture_default_str();
  opt->add_option("--iters", ocfg.iterations, "Iteration budget")->capture_default_str();
  opt->add_option("--step", ocfg.step, "Step size")->capture_default_str();
  opt->add_option("--method", method, "Optimizer")->check(CLI::IsMember({"adam", "gd"}))->capture_default_str();
  opt->add_flag("--pyramid", ocfg.pyramid, "Coarse-to-fine over a 3-level pyramid");
  opt->add_option("--unwrap", unwrap_opt, "Phase-unwrapped ToF gradients")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  opt->add_option("--epsilon", opt_eps, "Stabilizer in the depth reconstruction")->capture_default_str();
  opt->add_option("--seed", ocfg.seed, "Seed (recorded; the optimizer is deterministic)")->capture_default_str();
  opt->add_option("-o,--output", opt_out, "Output prefix")->required();

  // toy
  auto* toy = app.add_subcommand("toy", "Reconstruct m3 from a depth label on a synthetic phase field");
  int toy_w = 128, toy_h = 128, toy_iters = 2000;
  std::uint64_t toy_seed = 0;
  double toy_step = 1e-2, toy_f = 20e6;
  std::string toy_unwrap = "both", toy_out;
  toy->add_option("--width", toy_w)->capture_default_str();
  toy->add_option("--height", toy_h)->capture_default_str();
  toy->add_option("--seed", toy_seed)->capture_default_str();
  toy->add_option("--unwrap", toy_unwrap)->check(CLI::IsMember({"on", "off", "both"}))->capture_default_str();
  toy->add_option("--iters", toy_iters)->capture_default_str();
  toy->add_option("--step", toy_step, "Initial per-pixel step")->capture_default_str();
  toy->add_option("--frequency", toy_f, "Modulation frequency in Hz")->capture_default_str();
  toy->add_option("-o,--output", toy_out, "Output prefix")->required();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  int gc_trials = 100;
  std::uint64_t gc_seed = 0;
  std::string gc_out = "gradcheck";
  gc->add_option("--trials", gc_trials)->capture_default_str();
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_option("-o,--output", gc_out, "Output prefix for the report and manifest")->capture_default_str();

  // rerun
  auto* rr = app.add_subcommand("rerun", "Re-execute a run from its manifest and compare outputs");
  std::string manifest_path, rr_out;
  rr->add_option("manifest", manifest_path, "Manifest (.json)")->required();
  rr->add_option("-o,--output", rr_out, "Write to another prefix instead of the recorded one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::input_error;
  }

  try {
    if (*sim) {
      json params;
      std::ifstream in(scene_path);
      if (!in) throw InputError("cannot open scene file: " + scene_path);
      try {
        params["scene"] = json::parse(in);
      } catch (const json::exception& e) {
        throw InputError(scene_path + ": invalid JSON (" + e.what() + ")");
      }
      params["frequencies"] = freqs;
      params["taps"] = taps;
      params["seed"] = sim_seed;
      params["noise"] = noise;
      params["output"] = sim_out;
      return execute("simulate", params, args);
    }
    if (*rc) {
      json params{{"stack", absolute(stack_path)}, {"epsilon", rc_eps}, {"output", rc_out}};
      if (params["output"].get<std::string>().ends_with(".raw"))
        params["output"] = rc_out.substr(0, rc_out.size() - 4);
      params["gt"] = gt_path.empty() ? json(nullptr) : json(absolute(gt_path));
      return execute("reconstruct", params, args);
    }
    if (*opt) {
      w.measure = SimilarityMeasure::cosine;
      json weights = weights_to_json(w);
      weights["measure"] = measure;
      json params{{"bundle", absolute(bundle)},     {"weights", weights},
                  {"iterations", ocfg.iterations},  {"step", ocfg.step},
                  {"method", method},               {"pyramid", ocfg.pyramid},
                  {"unwrap", unwrap_opt == "on"},   {"epsilon", opt_eps},
                  {"seed", ocfg.seed},              {"output", opt_out}};
      return execute("optimize", params, args);
    }
    if (*toy) {
      json params{{"width", toy_w},   {"height", toy_h},     {"seed", toy_seed}, {"unwrap", toy_unwrap},
                  {"iterations", toy_iters}, {"step", toy_step}, {"frequency", toy_f}, {"output", toy_out}};
      return execute("toy", params, args);
    }
    if (*gc) {
      json params{{"trials", gc_trials}, {"seed", gc_seed}, {"output", gc_out}};
      return execute("gradcheck", params, args);
    }
    if (*rr) return rerun(manifest_path, rr_out.empty() ? std::nullopt : std::optional<std::string>(rr_out), args);
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return ExitCode::verification_failure;
  } catch (const Divergence&) {
    return ExitCode::divergence;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCode::input_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCode::input_error;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCode::input_error;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed parameters (" << e.what() << ")\n";
    return ExitCode::input_error;
  }
  return ExitCode::ok;
}
