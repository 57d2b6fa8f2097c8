#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "horizon/aggregation.hpp"
#include "horizon/error.hpp"
#include "horizon/estimator.hpp"
#include "horizon/evaluation.hpp"
#include "horizon/image.hpp"
#include "horizon/label_io.hpp"
#include "horizon/label_space.hpp"
#include "horizon/pano_sampler.hpp"
#include "horizon/parallel.hpp"
#include "horizon/sfm_labeler.hpp"
#include "horizon/synthetic.hpp"
#include "recorder.hpp"

namespace horizon::cli {
namespace fs = std::filesystem;
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_file(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  out << text;
}

void echo_config(const Recorder& rec, const std::string& path) {
  write_file(path, rec.to_json().dump(2) + "\n");
}

std::string double_text(double v) { return format_double(v); }

double extra_number(const LabelRecord& r, const std::string& key) {
  const auto it = r.extra.find(key);
  if (it == r.extra.end() || it->second.empty()) {
    throw Error(ErrorCode::kFormat, "label '" + r.image_id + "' lacks column '" + key + "'");
  }
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "label '" + r.image_id + "' has bad " + key + " '" + it->second + "'");
  }
}

/// Image path of a manifest row: its "path" column relative to the manifest,
/// else "<id>.png" next to the manifest.
std::string image_path(const LabelRecord& r, const std::string& manifest) {
  const fs::path dir = fs::path(manifest).parent_path();
  const auto it = r.extra.find("path");
  const fs::path rel = it != r.extra.end() && !it->second.empty() ? fs::path(it->second)
                                                                 : fs::path(r.image_id + ".png");
  return rel.is_absolute() ? rel.string() : (dir / rel).string();
}

std::vector<std::string> list_panoramas(const std::string& path) {
  if (fs::is_regular_file(path)) return {path};
  if (!fs::is_directory(path)) throw Error(ErrorCode::kFormat, "no panoramas at '" + path + "'");
  static const std::set<std::string> exts{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && exts.count(ext)) files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kFormat, "no panoramas in '" + path + "'");
  return files;
}

// Label of the maximal center square of an image, in that square's frame.
HorizonLine center_square_line(const LabelRecord& r) {
  return transfer_horizon(r.line(), Window::full(r.frame), center_square(r.frame), r.frame);
}

// ---------------------------------------------------------------------------

struct SynthSfm {
  std::string out;
  int cameras = 50;
  double roll_sigma = 2.0;
  double tilt_sigma = 5.0;
  double outliers = 0.0;
  int width = 640;
  int height = 480;
  std::uint64_t seed = kDefaultSeed;

  void add(Recorder& r) {
    r.option("--out", out, "Output model file (text)")->required();
    r.option("--cameras", cameras, "Number of cameras");
    r.option("--roll-sigma", roll_sigma, "Roll noise, degrees");
    r.option("--tilt-sigma", tilt_sigma, "Tilt noise, degrees");
    r.option("--outliers", outliers, "Fraction of 90-degree rolled cameras");
    r.option("--width", width, "Image width");
    r.option("--height", height, "Image height");
    r.option("--seed", seed, "Random seed");
  }

  int run(const Recorder& rec) const {
    SyntheticSfmOptions o;
    o.cameras = cameras;
    o.roll_sigma_deg = roll_sigma;
    o.tilt_sigma_deg = tilt_sigma;
    o.outlier_fraction = outliers;
    o.width = width;
    o.height = height;
    o.seed = seed;
    const SyntheticSfm synth = make_synthetic_sfm(o);
    std::ostringstream ss;
    write_sfm_text(ss, synth.model);
    write_file(out, ss.str());
    echo_config(rec, out + ".config.json");
    std::cout << "wrote " << synth.model.cameras.size() << " cameras to " << out << "\n";
    return 0;
  }
};

struct LabelSfm {
  std::string model;
  std::string out;
  std::string report;

  void add(Recorder& r) {
    r.option("--model", model, "SfM model file (.txt or .json)")->required();
    r.option("--out", out, "Output labels CSV")->required();
    r.option("--report", report, "Residual report JSON (default <out>.report.json)");
  }

  int run(const Recorder& rec) {
    if (report.empty()) report = out + ".report.json";
    const SfmModel m = read_sfm_file(model);
    const ZenithEstimate zenith = estimate_zenith(m);
    const ModelLabels labels = label_model(m, zenith);

    std::map<std::string, const SfmCamera*> cams;
    for (const auto& c : m.cameras) cams[c.image_id] = &c;
    std::vector<LabelRecord> records;
    for (const auto& l : labels.labels) {
      const SfmCamera& cam = *cams.at(l.image_id);
      LabelRecord r = LabelRecord::from_line(l.image_id, l.frame, l.line);
      const TiltRoll tr = tilt_roll_from_horizon(l.line, cam.rig.focal(), l.frame);
      r.extra["tilt_deg"] = double_text(rad2deg(tr.tilt));
      r.extra["roll_deg"] = double_text(rad2deg(tr.roll));
      r.extra["fov_deg"] = double_text(rad2deg(2.0 * std::atan(0.5 * l.frame.width / cam.rig.focal())));
      records.push_back(std::move(r));
    }
    std::ostringstream csv;
    write_labels_csv(csv, records, {"tilt_deg", "roll_deg", "fov_deg"});
    write_file(out, csv.str());

    const ResidualReport rep = make_residual_report(m, zenith);
    auto j = nlohmann::ordered_json::parse(residual_report_json(rep));
    j["labeled"] = labels.labels.size();
    j["skipped"] = nlohmann::ordered_json::array();
    for (const auto& s : labels.skipped) j["skipped"].push_back({{"image_id", s.image_id}, {"reason", s.reason}});
    write_file(report, j.dump(2) + "\n");
    echo_config(rec, out + ".config.json");

    std::printf("labeled %zu of %zu images; zenith %.4f deg from canonical up; median residual %.4f deg\n",
                labels.labels.size(), m.cameras.size(), rep.zenith_angle_deg, rep.median_residual_deg);
    return 0;
  }
};

struct FitDistributions {
  std::string labels;
  std::string out;

  void add(Recorder& r) {
    r.option("--labels", labels, "Labels CSV with tilt_deg, roll_deg, fov_deg columns")->required();
    r.option("--out", out, "Output distributions JSON")->required();
  }

  int run(const Recorder& rec) const {
    std::vector<CameraLabel> cams;
    for (const auto& r : read_labels_csv(labels)) {
      cams.push_back({deg2rad(extra_number(r, "tilt_deg")), deg2rad(extra_number(r, "roll_deg")),
                      extra_number(r, "fov_deg")});
    }
    const CameraParamDistributions d = fit_distributions(cams);
    write_file(out, distributions_to_json(d) + "\n");
    echo_config(rec, out + ".config.json");
    std::printf("fit %zu cameras: fov %.3f +- %.3f deg, roll scale %.5f rad\n", cams.size(),
                d.fov_deg.mean, d.fov_deg.stddev, d.roll.scale);
    return 0;
  }
};

struct PaintPanorama {
  std::string out;
  int height = 512;
  bool textured = false;
  std::uint64_t seed = kDefaultSeed;

  void add(Recorder& r) {
    r.option("--out", out, "Output image")->required();
    r.option("--height", height, "Panorama height (width is twice this)");
    r.flag("--textured", textured, "Random sky/ground texture instead of flat white/black");
    r.option("--seed", seed, "Texture seed");
  }

  int run(const Recorder& rec) const {
    const Panorama p = textured ? make_textured_panorama(height, seed) : make_painted_panorama(height);
    ensure_parent(out);
    write_image(out, p.pixels());
    echo_config(rec, out + ".config.json");
    return 0;
  }
};

struct SampleCutouts {
  std::string panos;
  std::string dists;
  std::string out;
  int count = 100;
  int size = 256;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 1;

  void add(Recorder& r) {
    r.option("--panos", panos, "Panorama file or directory")->required();
    r.option("--dists", dists, "Camera distributions JSON")->required();
    r.option("--out", out, "Output directory")->required();
    r.option("--count", count, "Number of cutouts");
    r.option("--size", size, "Cutout side in pixels");
    r.option("--seed", seed, "Random seed");
    r.option("--workers", workers, "Worker threads");
  }

  int run(const Recorder& rec) const {
    if (count < 0) throw Error(ErrorCode::kInvalidArgument, "count must be non-negative");
    const auto files = list_panoramas(panos);
    std::vector<Panorama> loaded;
    for (const auto& f : files) {
      try {
        loaded.emplace_back(read_image(f));
      } catch (const Error& e) {
        const std::string what = e.what();
        const std::string detail = what.substr(std::string(to_string(e.code())).size() + 2);
        throw Error(e.code(), "panorama '" + f + "': " + detail);
      }
    }
    const CameraParamDistributions d = distributions_from_json(read_file(dists));
    fs::create_directories(out);

    std::vector<LabelRecord> records(static_cast<std::size_t>(count));
    parallel_for(records.size(), workers, [&](std::size_t i) {
      const std::size_t pano = i % loaded.size();
      const CameraSample cam = sample_camera(d, derive_seed(seed, i));
      const Cutout c = render_cutout(loaded[pano], cam, size);
      char name[32];
      std::snprintf(name, sizeof(name), "cutout_%06zu.png", i);
      write_image((fs::path(out) / name).string(), c.image);
      LabelRecord r = LabelRecord::from_line(fs::path(name).stem().string(), c.image.frame(), c.line);
      r.extra["path"] = name;
      r.extra["pano"] = fs::path(files[pano]).filename().string();
      r.extra["yaw_deg"] = double_text(rad2deg(cam.yaw));
      r.extra["tilt_deg"] = double_text(rad2deg(cam.tilt));
      r.extra["roll_deg"] = double_text(rad2deg(cam.roll));
      r.extra["fov_deg"] = double_text(cam.fov_deg);
      r.extra["focal_px"] = double_text(c.focal_px);
      records[i] = std::move(r);
    });
    std::ostringstream csv;
    write_labels_csv(csv, records, {"path", "pano", "yaw_deg", "tilt_deg", "roll_deg", "fov_deg", "focal_px"});
    write_file((fs::path(out) / "labels.csv").string(), csv.str());
    echo_config(rec, (fs::path(out) / "run_config.json").string());
    std::printf("wrote %d cutouts from %zu panorama(s) to %s\n", count, files.size(), out.c_str());
    return 0;
  }
};

struct BuildBins {
  std::string labels;
  std::string out;
  int bins = 100;
  bool asymmetric_theta = false;

  void add(Recorder& r) {
    r.option("--labels", labels, "Training labels CSV")->required();
    r.option("--out", out, "Output label space JSON")->required();
    r.option("--bins", bins, "Bins per parameter");
    r.flag("--asymmetric-theta", asymmetric_theta, "Do not symmetrize theta edges about pi/2");
  }

  int run(const Recorder& rec) const {
    std::vector<double> thetas, rhos;
    for (const auto& r : read_labels_csv(labels)) {
      const HorizonLine l = center_square_line(r);
      thetas.push_back(l.theta());
      rhos.push_back(l.rho());
    }
    LabelSpace space;
    space.theta = build_bins(LabelParameter::kTheta, thetas, static_cast<std::size_t>(bins), !asymmetric_theta);
    space.rho = build_bins(LabelParameter::kRho, rhos, static_cast<std::size_t>(bins), false);
    write_file(out, label_space_to_json(space) + "\n");
    echo_config(rec, out + ".config.json");
    std::printf("built %d x %d bins from %zu labels\n", bins, bins, thetas.size());
    return 0;
  }
};

struct Train {
  std::string labels;
  std::string space;
  std::string kind = "linear";
  std::string out;
  std::string loss = "huber";
  std::string param = "lr";
  double delta = 1.0;
  double learning_rate = 1e-3;
  int epochs = 300;
  int batch = 32;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 1;

  void add(Recorder& r) {
    r.option("--labels", labels, "Training manifest CSV")->required();
    r.option("--space", space, "Label space JSON (prior only)");
    r.option("--kind", kind, "prior or linear")->check(CLI::IsMember({"prior", "linear"}));
    r.option("--out", out, "Output predictor JSON")->required();
    r.option("--loss", loss, "huber or l2")->check(CLI::IsMember({"huber", "l2"}));
    r.option("--param", param, "lr or theta_rho")->check(CLI::IsMember({"lr", "theta_rho"}));
    r.option("--delta", delta, "Huber threshold");
    r.option("--learning-rate", learning_rate, "SGD step size");
    r.option("--epochs", epochs, "Training epochs");
    r.option("--batch", batch, "Mini-batch size");
    r.option("--seed", seed, "Shuffle seed");
    r.option("--workers", workers, "Worker threads for image loading");
  }

  int run(const Recorder& rec) const {
    const auto records = read_labels_csv(labels);
    PredictorSpec spec;
    if (kind == "prior") {
      if (space.empty()) throw Error(ErrorCode::kInvalidArgument, "--space is required for the prior");
      std::vector<HorizonLine> lines;
      for (const auto& r : records) lines.push_back(center_square_line(r));
      spec = train_prior(lines, read_label_space(space));
      std::printf("prior over %zu labels\n", lines.size());
    } else {
      std::vector<TrainingExample> data(records.size());
      parallel_for(records.size(), workers, [&](std::size_t i) {
        data[i] = {read_image(image_path(records[i], labels)), records[i].line()};
      });
      TrainOptions o;
      o.loss = parse_loss_kind(loss);
      o.parameterization = parse_parameterization(param);
      o.delta = delta;
      o.learning_rate = learning_rate;
      o.epochs = epochs;
      o.batch_size = static_cast<std::size_t>(std::max(1, batch));
      o.seed = seed;
      const TrainResult res = train_linear_baseline(data, o);
      spec = res.spec;
      std::printf("trained on %zu images: loss %.6f -> %.6f (constant predictor %.6f)\n", data.size(),
                  res.epoch_losses.front(), res.epoch_losses.back(), res.constant_predictor_loss);
    }
    write_predictor(out, spec);
    echo_config(rec, out + ".config.json");
    return 0;
  }
};

struct PredictAggregate {
  std::string labels;
  std::string predictor;
  std::string space;
  std::string strategy = "center";
  std::string decoder = "argmax";
  std::string out;
  unsigned workers = 1;

  void add(Recorder& r) {
    r.option("--labels", labels, "Manifest CSV listing images (id, size, optional path)")->required();
    r.option("--predictor", predictor, "Predictor JSON")->required();
    r.option("--space", space, "Label space JSON")->required();
    r.option("--strategy", strategy, "center, average or optimize")
        ->check(CLI::IsMember({"center", "average", "optimize"}));
    r.option("--decoder", decoder, "Grid decoder: argmax or expectation")
        ->check(CLI::IsMember({"argmax", "expectation"}));
    r.option("--out", out, "Output predictions CSV")->required();
    r.option("--workers", workers, "Worker threads");
  }

  int run(const Recorder& rec) const {
    const auto records = read_labels_csv(labels);
    const PredictorSpec spec = read_predictor(predictor);
    const auto ls = std::make_shared<const LabelSpace>(read_label_space(space));
    const bool needs_pixels = spec.kind == PredictorSpec::Kind::kLinear;

    std::vector<LabelRecord> preds(records.size());
    std::vector<std::string> failures(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
      const LabelRecord& r = records[i];
      try {
        Image image;
        if (needs_pixels) image = read_image(image_path(r, labels));
        std::vector<Window> crops =
            strategy == "center" ? std::vector<Window>{center_square(r.frame)} : make_crop_grid(r.frame);
        SubwindowSet set{r.frame, {}};
        for (std::size_t k = 0; k < crops.size(); ++k) {
          Image patch;
          if (needs_pixels) patch = crop(image, crops[k]);
          PredictionInput in{r.image_id, static_cast<int>(k), needs_pixels ? &patch : nullptr, crops[k]};
          HorizonDistribution d = predict(spec, in, ls);
          if (!needs_pixels && decoder == "expectation") d.set_point_estimate(d.decode(Decoder::kExpectation));
          set.subwindows.push_back(std::move(d));
        }
        HorizonLine line;
        if (strategy == "center") {
          line = transfer_horizon(set.subwindows[0].point_estimate(), crops[0], Window::full(r.frame), r.frame);
        } else if (strategy == "average") {
          line = aggregate_average(set).line;
        } else {
          line = aggregate_nll(set).line;
        }
        preds[i] = LabelRecord::from_line(r.image_id, r.frame, line);
      } catch (const Error& e) {
        failures[i] = r.image_id + ": " + e.what();
      }
    });
    int failed = 0;
    for (const auto& f : failures) {
      if (!f.empty()) {
        std::cerr << "error: " << f << "\n";
        ++failed;
      }
    }
    if (failed > 0) {
      std::cerr << failed << " of " << records.size() << " image(s) failed; no predictions written\n";
      return 2;
    }
    std::ostringstream csv;
    write_labels_csv(csv, preds);
    write_file(out, csv.str());
    echo_config(rec, out + ".config.json");
    std::printf("wrote %zu predictions (%s)\n", preds.size(), strategy.c_str());
    return 0;
  }
};

struct Evaluate {
  std::string labels;
  std::string predictions;
  std::string out_dir;
  double max_threshold = kDefaultMaxThreshold;
  bool allow_missing = false;
  unsigned workers = 1;

  void add(Recorder& r) {
    r.option("--labels", labels, "Ground-truth labels CSV")->required();
    r.option("--predictions", predictions, "Predictions CSV")->required();
    r.option("--out-dir", out_dir, "Directory for per-image and curve CSVs")->required();
    r.option("--max-threshold", max_threshold, "Upper integration bound, image heights");
    r.flag("--allow-missing", allow_missing, "Exclude labels without a prediction");
    r.option("--workers", workers, "Worker threads");
  }

  int run(const Recorder& rec) const {
    const DatasetEvaluation eval = evaluate_dataset(read_labels_csv(labels), read_labels_csv(predictions),
                                                    max_threshold, allow_missing, workers);
    fs::create_directories(out_dir);
    std::ostringstream per, curve;
    write_per_image_csv(per, eval);
    write_curve_csv(curve, eval.curve);
    write_file((fs::path(out_dir) / "per_image.csv").string(), per.str());
    write_file((fs::path(out_dir) / "curve.csv").string(), curve.str());
    nlohmann::ordered_json summary;
    summary["images"] = eval.per_image.size();
    summary["missing"] = eval.missing;
    summary["max_threshold"] = max_threshold;
    summary["auc"] = eval.curve.auc;
    write_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    echo_config(rec, (fs::path(out_dir) / "run_config.json").string());
    for (const auto& id : eval.missing) std::cerr << "warning: no prediction for " << id << "\n";
    std::printf("AUC: %.4f (%zu images, max threshold %s)\n", eval.curve.auc, eval.per_image.size(),
                format_double(max_threshold).c_str());
    return 0;
  }
};

int replay(const std::string& config) {
  const auto j = nlohmann::json::parse(read_file(config));
  const auto argv = j.at("argv").get<std::vector<std::string>>();
  if (argv.empty() || argv.front() == "replay") {
    throw Error(ErrorCode::kFormat, "config '" + config + "' has no replayable command");
  }
  return run(argv);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Horizon line toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "horizon 0.1.0");

  SynthSfm synth_sfm;
  LabelSfm label_sfm;
  FitDistributions fit_dists;
  PaintPanorama paint;
  SampleCutouts sample;
  BuildBins build;
  Train train;
  PredictAggregate predict_agg;
  Evaluate evaluate;
  std::string replay_config;

  std::vector<std::unique_ptr<Recorder>> recorders;
  auto command = [&](const char* name, const char* help, auto& cmd) -> Recorder& {
    recorders.push_back(std::make_unique<Recorder>(app.add_subcommand(name, help), name));
    cmd.add(*recorders.back());
    return *recorders.back();
  };
  Recorder& r_synth = command("synth-sfm", "Write a synthetic SfM model with known zenith", synth_sfm);
  Recorder& r_label = command("label-sfm", "Label images of an SfM model with its global horizon", label_sfm);
  Recorder& r_fit = command("fit-distributions", "Fit camera parameter distributions to labels", fit_dists);
  Recorder& r_paint = command("paint-panorama", "Write a synthetic panorama", paint);
  Recorder& r_sample = command("sample-cutouts", "Render labeled cutouts from panoramas", sample);
  Recorder& r_build = command("build-bins", "Build the (theta, rho) label space", build);
  Recorder& r_train = command("train", "Train the prior or the linear baseline", train);
  Recorder& r_predict =
      command("predict-aggregate", "Predict horizons with a crop strategy", predict_agg);
  Recorder& r_eval = command("evaluate", "Horizon error and AUC of predictions", evaluate);
  CLI::App* rep = app.add_subcommand("replay", "Re-run a command from its echoed config");
  rep->add_option("config", replay_config, "Config JSON written by an earlier run")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version exit cleanly; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (r_synth.app()->parsed()) return synth_sfm.run(r_synth);
    if (r_label.app()->parsed()) return label_sfm.run(r_label);
    if (r_fit.app()->parsed()) return fit_dists.run(r_fit);
    if (r_paint.app()->parsed()) return paint.run(r_paint);
    if (r_sample.app()->parsed()) return sample.run(r_sample);
    if (r_build.app()->parsed()) return build.run(r_build);
    if (r_train.app()->parsed()) return train.run(r_train);
    if (r_predict.app()->parsed()) return predict_agg.run(r_predict);
    if (r_eval.app()->parsed()) return evaluate.run(r_eval);
    if (rep->parsed()) return replay(replay_config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: format: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace horizon::cli
