#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harmonizer/error.hpp"
#include "harmonizer/fitter.hpp"
#include "harmonizer/harmonize.hpp"
#include "harmonizer/io.hpp"
#include "harmonizer/metrics.hpp"
#include "harmonizer/serialization.hpp"
#include "harmonizer/synth.hpp"
#include "harmonizer/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace harmonizer;

namespace {

// Flags shared by every subcommand. Unset flags leave the config file value alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string pipeline;
  std::string model;
  std::optional<double> alpha;
  std::string mode;
  std::string loss;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "64-bit seed");
  app->add_option("--pipeline", f.pipeline, "pipeline as inline JSON or a JSON file");
  app->add_option("--model", f.model, "model JSON path");
  app->add_option("--alpha", f.alpha, "EMA weight of the newest frame, in (0,1]");
  app->add_option("--mode", f.mode, "cascade|multihead")->check(CLI::IsMember({"cascade", "multihead"}));
  app->add_option("--loss", f.loss, "staged|final")->check(CLI::IsMember({"staged", "final"}));
  app->add_option("--out", f.out, "output path");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  json overlay = json::object();
  if (f.seed) overlay["seed"] = *f.seed;
  if (f.alpha) overlay["alpha"] = *f.alpha;
  if (!f.mode.empty()) overlay["mode"] = f.mode;
  if (!f.loss.empty()) overlay["loss"] = f.loss;
  if (!f.model.empty()) overlay["model"] = f.model;
  if (!f.out.empty()) overlay["out"] = f.out;
  if (!f.pipeline.empty()) {
    const auto first = f.pipeline.find_first_not_of(" \t\n");
    const bool inline_json = first != std::string::npos && (f.pipeline[first] == '[' || f.pipeline[first] == '{');
    try {
      overlay["pipeline"] = inline_json ? json::parse(f.pipeline) : read_json_file(f.pipeline);
    } catch (const json::parse_error& e) {
      throw DomainError(std::string("--pipeline is not valid JSON: ") + e.what());
    }
  }
  c = config_from_json(overlay, c);
  c.validate();
  return c;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

RegressorModel load_model_for(const RunConfig& c) {
  require(!c.model_path.empty(), "--model is required");
  RegressorModel m = load_model(c.model_path);
  require(m.arg_count() == c.pipeline.size(), "model predicts " + std::to_string(m.arg_count()) +
                                                  " arguments but the pipeline has " +
                                                  std::to_string(c.pipeline.size()) + " filters");
  return m;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

// Image files in `dir` whose stem ends with `suffix`, keyed by the stem minus the suffix.
std::map<std::string, fs::path> list_images(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "not a directory");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    if (stem.size() < suffix.size() || stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    out.emplace(stem.substr(0, stem.size() - suffix.size()), entry.path());
  }
  return out;
}

fs::path partner(const std::map<std::string, fs::path>& files, const std::string& key, const fs::path& dir) {
  const auto it = files.find(key);
  if (it == files.end()) throw IoError(dir.string(), "no file matching '" + key + "'");
  return it->second;
}

std::string sample_name(std::size_t i) {
  std::ostringstream s;
  s << "sample_" << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

// ---- synth

struct SynthFlags {
  std::size_t procedural = 0;
  int size = 64;
  std::string images;
  std::string masks;
  std::string mask_suffix;
  std::optional<double> clip;
};

void write_sample(const CompositeSample& s, const FilterPipeline& p, const fs::path& dir, std::size_t index,
                  const json& extra) {
  const std::string name = sample_name(index);
  save_image(s.composite, dir / (name + "_composite.png"));
  save_image(s.natural, dir / (name + "_natural.png"));
  save_mask(s.mask, dir / (name + "_mask.png"));
  json side = {{"xi", args_to_json(s.xi)},
               {"pipeline", pipeline_to_json(p)},
               {"seed", s.seed},
               {"clipped_fraction", s.clipped_fraction}};
  side.update(extra);
  write_json_file(side, dir / (name + ".json"));
}

int run_synth(const CommonFlags& cf, const SynthFlags& sf) {
  RunConfig c = resolve(cf);
  if (sf.clip) c.clip_threshold = *sf.clip;
  c.validate();
  require(!c.out_dir.empty(), "--out is required");
  require((sf.procedural > 0) != !sf.images.empty(), "give exactly one of --procedural N or --images DIR");
  const fs::path out = c.out_dir;
  fs::create_directories(out);

  if (sf.procedural > 0) {
    require(sf.size >= 8, "--size must be at least 8");
    const auto corpus = synthesize_corpus(sf.procedural, sf.size, sf.size, c.pipeline, c.seed, c.clip_threshold);
    for (std::size_t i = 0; i < corpus.size(); ++i) write_sample(corpus[i], c.pipeline, out, i, json{{"source", "procedural"}});
    std::cout << "wrote " << corpus.size() << " samples to " << out.string() << "\n";
    return 0;
  }

  require(!sf.masks.empty(), "--masks is required with --images");
  const auto images = list_images(sf.images, "");
  const auto masks = list_images(sf.masks, sf.mask_suffix);
  std::size_t index = 0;
  std::size_t skipped = 0;
  for (const auto& [key, path] : images) {
    if (std::any_of(masks.begin(), masks.end(), [&](const auto& m) { return fs::equivalent(m.second, path); })) {
      continue;  // images and masks may share a directory
    }
    const Image natural = load_image(path);
    const Mask mask = load_mask(partner(masks, key, sf.masks));
    require(mask.matches(natural), "mask size differs from " + path.string());
    const std::uint64_t seed = c.seed + index + skipped;
    std::optional<CompositeSample> accepted;
    for (std::uint64_t attempt = 0; attempt < 100 && !accepted; ++attempt) {
      CompositeSample s = generate_composite(natural, mask, c.pipeline, sample_args(c.pipeline.priors, seed * 1000 + attempt));
      if (clipping_guard(s, c.clip_threshold)) {
        s.seed = seed;
        accepted = std::move(s);
      }
    }
    if (!accepted) {
      std::cerr << "warning: " << path.string() << " clips too much under every draw; skipped\n";
      ++skipped;
      continue;
    }
    write_sample(*accepted, c.pipeline, out, index, json{{"source", path.string()}});
    ++index;
  }
  require(index > 0, "no samples were produced");
  std::cout << "wrote " << index << " samples to " << out.string() << "\n";
  return 0;
}

// ---- train

struct TrainFlags {
  std::string data;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::string optimizer;
  bool no_dynamic = false;
};

std::vector<TrainingExample> load_corpus(const fs::path& dir, const FilterPipeline& pipeline) {
  const auto naturals = list_images(dir, "_natural");
  const auto masks = list_images(dir, "_mask");
  std::vector<CompositeSample> samples;
  for (const auto& [key, path] : naturals) {
    const json side = read_json_file(dir / (key + ".json"));
    const FilterPipeline recorded = pipeline_from_json(side.at("pipeline"));
    require(recorded.filters == pipeline.filters, key + " was synthesized with a different filter order");
    const ArgVector xi(side.at("xi").get<std::vector<double>>());
    CompositeSample s = generate_composite(load_image(path), load_mask(partner(masks, key, dir)), pipeline, xi);
    s.seed = side.value("seed", std::uint64_t{0});
    samples.push_back(std::move(s));
  }
  require(!samples.empty(), "no *_natural images found in " + dir.string());
  return make_training_examples(std::move(samples));
}

int run_train(const CommonFlags& cf, const TrainFlags& tf) {
  RunConfig c = resolve(cf);
  if (tf.steps) c.train.steps = *tf.steps;
  if (tf.batch) c.train.batch_size = *tf.batch;
  if (tf.lr) c.train.options.learning_rate = *tf.lr;
  if (!tf.optimizer.empty()) c.train.optimizer = tf.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  if (tf.no_dynamic) c.train.options.dynamic = false;
  c.train.seed = c.seed;
  c.validate();
  require(!c.model_path.empty(), "--model is required (output path)");

  const auto corpus = load_corpus(tf.data, c.pipeline);
  RegressorModel model = RegressorModel::initialized(c.mode, c.pipeline.size(), c.seed);
  std::vector<FeatureVector> features;
  features.reserve(corpus.size());
  for (const TrainingExample& ex : corpus) features.push_back(ex.features);
  fit_input_normalization(model, features);

  const std::size_t every = std::max<std::size_t>(1, c.train.steps / 10);
  model = train(std::move(model), corpus, c.pipeline, c.train, [&](long step, const LossReport& r) {
    if (step % static_cast<long>(every) == 0 || step + 1 == static_cast<long>(c.train.steps)) {
      std::cout << "step " << step << " total " << r.total << " final " << r.final_stage() << "\n";
    }
  });
  ensure_parent(c.model_path);
  save_model(model, c.model_path);
  if (!c.out_dir.empty()) {
    fs::create_directories(c.out_dir);
    write_json_file(config_to_json(c), fs::path(c.out_dir) / "config.json");
  }
  return 0;
}

// ---- harmonize

struct HarmonizeFlags {
  std::string input;
  std::string mask;
};

int run_harmonize(const CommonFlags& cf, const HarmonizeFlags& hf) {
  const RunConfig c = resolve(cf);
  require(!c.out_dir.empty(), "--out is required");
  const RegressorModel model = load_model_for(c);
  const Image composite = load_image(hf.input);
  const Mask mask = load_mask(hf.mask);
  require(mask.matches(composite), "mask and composite differ in size");
  const HarmonizeResult r = harmonize(composite, mask, model, c.pipeline);
  fs::path out = c.out_dir;
  if (!is_image_file(out)) out /= fs::path(hf.input).stem().string() + ".png";
  ensure_parent(out);
  save_image(r.image, out);
  std::cout << args_to_json(r.theta).dump() << "\n";
  return 0;
}

// ---- fit

struct FitFlags {
  std::string composite;
  std::string mask;
  std::string target;
  std::string method = "gradient";
  int steps = GradientFitOptions{}.steps;
  double lr = GradientFitOptions{}.learning_rate;
  int rounds = 4;
};

int run_fit(const CommonFlags& cf, const FitFlags& ff) {
  const RunConfig c = resolve(cf);
  require(!c.out_dir.empty(), "--out is required");
  const Image composite = load_image(ff.composite);
  const Mask mask = load_mask(ff.mask);
  const Image target = load_image(ff.target);
  const FitResult r = ff.method == "coordinate" ? fit_coordinate(composite, mask, target, c.pipeline, ff.rounds)
                                                : fit_gradient(composite, mask, target, c.pipeline, {ff.steps, ff.lr, 0.9, 0.999, 1e-12});
  ensure_parent(c.out_dir);
  json j = fit_result_to_json(r, c.pipeline);
  j["method"] = ff.method;
  write_json_file(j, c.out_dir);
  std::cout << "fmse " << r.fmse << "\n";
  return 0;
}

// ---- eval

struct EvalFlags {
  std::string outputs;
  std::string targets;
  std::string masks;
  std::string output_suffix;
  std::string target_suffix;
  std::string mask_suffix;
};

int run_eval(const CommonFlags& cf, const EvalFlags& ef) {
  const RunConfig c = resolve(cf);
  require(!c.out_dir.empty(), "--out is required");
  const auto outputs = list_images(ef.outputs, ef.output_suffix);
  const auto targets = list_images(ef.targets, ef.target_suffix);
  const auto masks = list_images(ef.masks, ef.mask_suffix);
  require(!outputs.empty(), "no output images found in " + ef.outputs);
  std::vector<EvalRecord> records;
  for (const auto& [key, path] : outputs) {
    records.push_back(evaluate(load_image(path), load_image(partner(targets, key, ef.targets)),
                               load_mask(partner(masks, key, ef.masks)), key));
  }
  records.push_back(mean_record(records));
  ensure_parent(c.out_dir);
  std::ofstream csv(c.out_dir);
  if (!csv) throw IoError(c.out_dir, "cannot open for writing");
  csv << "id,mse,fmse,psnr\n" << std::setprecision(10);
  for (const EvalRecord& r : records) csv << r.id << ',' << r.mse << ',' << r.fmse << ',' << r.psnr << '\n';
  if (!csv) throw IoError(c.out_dir, "write failed");
  const EvalRecord& m = records.back();
  std::cout << "images " << records.size() - 1 << " mse " << m.mse << " fmse " << m.fmse << " psnr " << m.psnr << "\n";
  return 0;
}

// ---- video

struct VideoFlags {
  std::string frames;
  std::string frame_suffix;
  std::string masks;
  std::string mask_suffix;
};

int run_video(const CommonFlags& cf, const VideoFlags& vf) {
  const RunConfig c = resolve(cf);
  require(!c.out_dir.empty(), "--out is required");
  const RegressorModel model = load_model_for(c);
  const auto frames = list_images(vf.frames, vf.frame_suffix);
  const auto masks = list_images(vf.masks, vf.mask_suffix);
  require(!frames.empty(), "no frames found in " + vf.frames);
  require(frames.size() == masks.size(), "frame count " + std::to_string(frames.size()) + " differs from mask count " +
                                             std::to_string(masks.size()));
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  VideoHarmonizer video(model, c.pipeline, c.alpha);
  json log = json::array();
  std::size_t t = 0;
  for (const auto& [key, path] : frames) {
    const Image frame = load_image(path);
    const Mask mask = load_mask(partner(masks, key, vf.masks));
    require(mask.matches(frame), "mask size differs from " + path.string());
    const VideoFrameResult r = video.process(frame, mask);
    save_image(r.image, out / (key + ".png"));
    log.push_back({{"frame", t++}, {"id", key}, {"theta", args_to_json(r.theta)}, {"smoothed", args_to_json(r.smoothed)}});
  }
  write_json_file(json{{"alpha", c.alpha}, {"frames", log}}, out / "arguments.json");
  std::cout << "harmonized " << t << " frames into " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filter-based image harmonization"};
  app.require_subcommand(1);

  CommonFlags common;

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "synthesize composites from natural images");
  add_common(synth, common);
  synth->add_option("--procedural", sf.procedural, "generate N procedural scenes");
  synth->add_option("--size", sf.size, "procedural image side in pixels");
  synth->add_option("--images", sf.images, "directory of natural images");
  synth->add_option("--masks", sf.masks, "directory of foreground masks");
  synth->add_option("--mask-suffix", sf.mask_suffix, "mask file stem suffix");
  synth->add_option("--clip-threshold", sf.clip, "reject samples with more clipped foreground than this");

  TrainFlags tf;
  auto* trainc = app.add_subcommand("train", "train the argument regressor");
  add_common(trainc, common);
  trainc->add_option("--data", tf.data, "directory written by synth")->required();
  trainc->add_option("--steps", tf.steps);
  trainc->add_option("--batch-size", tf.batch);
  trainc->add_option("--lr", tf.lr);
  trainc->add_option("--optimizer", tf.optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  trainc->add_flag("--no-dynamic", tf.no_dynamic, "use the plain staged loss");

  HarmonizeFlags hf;
  auto* harm = app.add_subcommand("harmonize", "harmonize one composite");
  add_common(harm, common);
  harm->add_option("--input", hf.input)->required();
  harm->add_option("--mask", hf.mask)->required();

  FitFlags ff;
  auto* fit = app.add_subcommand("fit", "fit filter arguments to a reference image");
  add_common(fit, common);
  fit->add_option("--composite", ff.composite)->required();
  fit->add_option("--mask", ff.mask)->required();
  fit->add_option("--target", ff.target)->required();
  fit->add_option("--method", ff.method)->check(CLI::IsMember({"gradient", "coordinate"}));
  fit->add_option("--steps", ff.steps);
  fit->add_option("--lr", ff.lr);
  fit->add_option("--rounds", ff.rounds);

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "score harmonized outputs against ground truth");
  add_common(eval, common);
  eval->add_option("--outputs", ef.outputs)->required();
  eval->add_option("--targets", ef.targets)->required();
  eval->add_option("--masks", ef.masks)->required();
  eval->add_option("--output-suffix", ef.output_suffix);
  eval->add_option("--target-suffix", ef.target_suffix);
  eval->add_option("--mask-suffix", ef.mask_suffix);

  VideoFlags vf;
  auto* video = app.add_subcommand("video", "harmonize an ordered frame sequence with smoothing");
  add_common(video, common);
  video->add_option("--frames", vf.frames)->required();
  video->add_option("--frame-suffix", vf.frame_suffix);
  video->add_option("--masks", vf.masks)->required();
  video->add_option("--mask-suffix", vf.mask_suffix);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(common, sf);
    if (*trainc) return run_train(common, tf);
    if (*harm) return run_harmonize(common, hf);
    if (*fit) return run_fit(common, ff);
    if (*eval) return run_eval(common, ef);
    if (*video) return run_video(common, vf);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "error: training diverged at step " << e.step() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
