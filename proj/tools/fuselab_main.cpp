#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fuselab/baselines.hpp"
#include "fuselab/bridge_fusion.hpp"
#include "fuselab/complexity.hpp"
#include "fuselab/degradation.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/gradsuites.hpp"
#include "fuselab/image.hpp"
#include "fuselab/nmrp.hpp"
#include "fuselab/opcount.hpp"
#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"
#include "fuselab/tensor_io.hpp"

namespace {

using nlohmann::json;
using namespace fuselab;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path + ": read failure");
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError(path + ": write failure");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const std::string text = read_file(path);
  json cfg = json::parse(text, nullptr, false);
  if (cfg.is_discarded()) throw ParamError(path + ": config is not valid JSON");
  if (!cfg.is_object()) throw ParamError(path + ": config must be a JSON object");
  return cfg;
}

// Flags beat config; config beats built-in defaults.
template <typename T>
void overlay(const CLI::App& cmd, const std::string& flag, const json& cfg,
             const char* key, T& value) {
  if (cmd.count(flag) == 0 && cfg.contains(key)) {
    try {
      value = cfg.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParamError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

Tensor randn(Rng& rng, Shape shape, double sigma = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

json tensor_stats(const Tensor& t) {
  double lo = t[0], hi = t[0], sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    lo = std::min(lo, t[i]);
    hi = std::max(hi, t[i]);
    sum += t[i];
  }
  return json{{"shape", t.shape()},
              {"min", lo},
              {"max", hi},
              {"mean", sum / double(t.size())}};
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<DegradationLevel> levels_from(const json& cfg) {
  if (!cfg.contains("levels")) return default_degradation_levels();
  std::vector<DegradationLevel> out;
  for (const json& e : cfg.at("levels")) {
    DegradationLevel lv;
    lv.level = e.at("level").get<int>();
    lv.gamma = e.at("gamma").get<double>();
    lv.kernel = e.at("kernel").get<int>();
    lv.sigma_noise = e.at("sigma_noise").get<double>();
    out.push_back(lv);
  }
  return out;
}

DegradationLevel find_level(const std::vector<DegradationLevel>& ladder, int level) {
  for (const DegradationLevel& lv : ladder) {
    if (lv.level == level) return lv;
  }
  throw ParamError("no level " + std::to_string(level) + " in the degradation ladder");
}

std::vector<BoxAnnotation> boxes_from_json(const json& arr, const std::string& origin) {
  if (!arr.is_array()) throw ParamError(origin + ": boxes must be a JSON array");
  std::vector<BoxAnnotation> boxes;
  for (const json& e : arr) {
    if (!e.is_array() || e.size() != 4) {
      throw ParamError(origin + ": each box must be [x1,y1,x2,y2]");
    }
    boxes.push_back({e[0].get<long>(), e[1].get<long>(), e[2].get<long>(),
                     e[3].get<long>()});
  }
  return boxes;
}

json boxes_to_json(const std::vector<BoxAnnotation>& boxes) {
  json arr = json::array();
  for (const BoxAnnotation& b : boxes) arr.push_back({b.x1, b.y1, b.x2, b.y2});
  return arr;
}

CategoryReduction parse_reduction(const std::string& name) {
  if (name == "max") return CategoryReduction::kMax;
  if (name == "mean") return CategoryReduction::kMean;
  throw ParamError("reduction must be 'max' or 'mean', got '" + name + "'");
}

// Stride-aligned block means, scaled to [0,1]. Partial edge blocks average
// over the pixels they actually cover.
Tensor block_mean_features(const Image8& img, std::size_t stride) {
  const std::size_t hf = (img.height + stride - 1) / stride;
  const std::size_t wf = (img.width + stride - 1) / stride;
  Tensor out = Tensor::zeros({img.channels, hf, wf});
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t r = 0; r < hf; ++r) {
      for (std::size_t q = 0; q < wf; ++q) {
        const std::size_t y0 = r * stride, y1 = std::min(y0 + stride, img.height);
        const std::size_t x0 = q * stride, x1 = std::min(x0 + stride, img.width);
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t x = x0; x < x1; ++x) sum += double(img.at(c, y, x));
        out.at3(c, r, q) = sum / (255.0 * double((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

int run_synth(const CLI::App& cmd, const std::string& config_path,
              std::uint64_t seed, SceneSpec spec, const std::string& out_rgb,
              const std::string& out_ir, const std::string& out_boxes) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--seed", cfg, "seed", seed);
  overlay(cmd, "--width", cfg, "scene_width", spec.width);
  overlay(cmd, "--height", cfg, "scene_height", spec.height);
  overlay(cmd, "--objects", cfg, "objects", spec.objects);
  overlay(cmd, "--min-size", cfg, "min_size", spec.min_size);
  overlay(cmd, "--max-size", cfg, "max_size", spec.max_size);

  Rng rng(seed);
  const SynthScene scene = synth_scene(rng, spec);
  json outputs = json::object();
  if (!out_rgb.empty()) {
    save_image(out_rgb, scene.rgb);
    outputs["rgb"] = out_rgb;
  }
  if (!out_ir.empty()) {
    save_image(out_ir, scene.ir);
    outputs["ir"] = out_ir;
  }
  if (!out_boxes.empty()) {
    write_file(out_boxes, boxes_to_json(scene.boxes).dump(2) + "\n");
    outputs["boxes"] = out_boxes;
  }
  emit(json{{"subcommand", "synth"},
            {"seed", seed},
            {"width", spec.width},
            {"height", spec.height},
            {"objects", spec.objects},
            {"boxes", boxes_to_json(scene.boxes)},
            {"outputs", outputs}});
  return 0;
}

int run_degrade(const CLI::App& cmd, const std::string& config_path,
                std::uint64_t seed, int level, bool no_noise,
                const std::string& input, const std::string& output) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--seed", cfg, "seed", seed);
  bool noise = !no_noise;
  if (cmd.count("--no-noise") == 0 && cfg.contains("noise")) {
    noise = cfg.at("noise").get<bool>();
  }
  const DegradationLevel lv = find_level(levels_from(cfg), level);

  json j{{"subcommand", "degrade"}, {"level", lv.level},     {"gamma", lv.gamma},
         {"kernel", lv.kernel},     {"sigma_noise", lv.sigma_noise},
         {"noise", noise},          {"seed", seed},          {"input", input},
         {"output", output}};
  if (lv.level == 0) {
    const std::string bytes = read_file(input);
    const Image8 img = decode_image(
        std::vector<std::uint8_t>(bytes.begin(), bytes.end()), input);
    write_file(output, bytes);
    j["channels"] = img.channels;
    j["height"] = img.height;
    j["width"] = img.width;
    emit(j);
    return 0;
  }
  const Image8 img = load_image(input);
  Rng rng(seed);
  DegradeOptions options;
  options.apply_noise = noise;
  const Image8 out = degrade(img, lv, rng, options);
  save_image(output, out);
  j["channels"] = out.channels;
  j["height"] = out.height;
  j["width"] = out.width;
  emit(j);
  return 0;
}

int run_occupancy(const std::string& image_path, const std::string& boxes_path,
                  const std::string& box_str) {
  const Image8 ir = load_image(image_path);
  std::vector<BoxAnnotation> boxes;
  if (!boxes_path.empty()) {
    json arr = json::parse(read_file(boxes_path), nullptr, false);
    if (arr.is_discarded()) throw ParamError(boxes_path + ": not valid JSON");
    boxes = boxes_from_json(arr, boxes_path);
  }
  if (!box_str.empty()) {
    BoxAnnotation b;
    if (std::sscanf(box_str.c_str(), "%ld,%ld,%ld,%ld", &b.x1, &b.y1, &b.x2, &b.y2) != 4) {
      throw ParamError("--box expects 'x1,y1,x2,y2', got '" + box_str + "'");
    }
    boxes.push_back(b);
  }
  if (boxes.empty()) boxes.push_back({0, 0, long(ir.width), long(ir.height)});

  json rows = json::array();
  double sum_r = 0.0;
  for (const BoxAnnotation& b : boxes) {
    const OccupancyResult res = otsu_occupancy(ir, b);
    rows.push_back(json{{"box", {b.x1, b.y1, b.x2, b.y2}},
                        {"r", res.r},
                        {"threshold", res.threshold},
                        {"degenerate", res.degenerate}});
    sum_r += res.r;
  }
  emit(json{{"subcommand", "occupancy"},
            {"image", image_path},
            {"boxes", rows},
            {"mean_r", sum_r / double(boxes.size())}});
  return 0;
}

int run_flops(const CLI::App& cmd, const std::string& config_path, std::uint64_t n,
              std::uint64_t m_cat, std::uint64_t c, bool no_measure) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--mcat", cfg, "m_cat", m_cat);
  overlay(cmd, "--c", cfg, "flops_c", c);

  json j{{"subcommand", "flops"},
         {"n", n},
         {"m_cat", m_cat},
         {"c", c},
         {"analytic_dir", flops_direct(n, c)},
         {"analytic_bridge", flops_bridge(n, m_cat, c)},
         {"ratio", flops_ratio(n, m_cat)},
         {"measured", !no_measure}};
  if (!no_measure) {
    const Tensor x_rgb = Tensor::zeros({std::size_t(c), 1, std::size_t(n)});
    const Tensor x_ir = Tensor::zeros({std::size_t(c), 1, std::size_t(n)});
    const Tensor t = Tensor::zeros({std::size_t(m_cat), std::size_t(c)});
    OpCounter counter;
    CounterScope scope(counter);
    const MeasuredFlops measured = measured_bridge_vs_direct(x_rgb, x_ir, t);
    j["counted_dir"] = measured.direct;
    j["counted_bridge"] = measured.bridge;
  }
  emit(j);
  return 0;
}

int run_gradcheck(const std::string& module, std::uint64_t seed,
                  const std::string& out_csv) {
  const std::vector<GradCheckReport> reports = run_gradsuite(module, seed);
  const std::string csv = gradcheck_csv(reports);
  if (!out_csv.empty()) write_file(out_csv, csv);
  json rows = json::array();
  bool all_pass = true;
  for (const GradCheckReport& rep : reports) {
    rows.push_back(json{{"parameter", rep.parameter},
                        {"max_rel_err", rep.max_rel_err},
                        {"pass", rep.pass}});
    all_pass = all_pass && rep.pass;
  }
  json j{{"subcommand", "gradcheck"},
         {"module", module},
         {"seed", seed},
         {"parameters", rows},
         {"all_pass", all_pass}};
  if (!out_csv.empty()) j["csv_path"] = out_csv;
  emit(j);
  return 0;
}

struct ShapeFlags {
  std::size_t c_rgb = 128;
  std::size_t c_ir = 64;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t m_cat = 4;
  std::size_t d_t = 512;
  std::size_t d_k = 64;
};

void overlay_shapes(const CLI::App& cmd, const json& cfg, ShapeFlags& s) {
  overlay(cmd, "--c-rgb", cfg, "c_rgb", s.c_rgb);
  overlay(cmd, "--c-ir", cfg, "c_ir", s.c_ir);
  overlay(cmd, "--height", cfg, "height", s.height);
  overlay(cmd, "--width", cfg, "width", s.width);
  overlay(cmd, "--mcat", cfg, "m_cat", s.m_cat);
  overlay(cmd, "--d-t", cfg, "d_t", s.d_t);
  overlay(cmd, "--d-k", cfg, "d_k", s.d_k);
}

int run_fuse(const CLI::App& cmd, const std::string& config_path, std::uint64_t seed,
             ShapeFlags shapes, double alpha, double beta, std::string reduction,
             const std::string& x_rgb_path, const std::string& x_ir_path,
             const std::string& text_path, const std::string& out_path,
             const std::string& out_att_path) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--seed", cfg, "seed", seed);
  overlay_shapes(cmd, cfg, shapes);
  overlay(cmd, "--alpha", cfg, "alpha", alpha);
  overlay(cmd, "--beta", cfg, "beta", beta);
  overlay(cmd, "--reduction", cfg, "reduction", reduction);

  Rng rng(seed);
  const Tensor x_rgb = x_rgb_path.empty()
                           ? randn(rng, {shapes.c_rgb, shapes.height, shapes.width})
                           : load_tensor(x_rgb_path);
  const Tensor x_ir = x_ir_path.empty()
                          ? randn(rng, {shapes.c_ir, shapes.height, shapes.width})
                          : load_tensor(x_ir_path);
  if (x_rgb.rank() != 3 || x_ir.rank() != 3) {
    throw ShapeError("fuse: inputs must be rank 3 {C,H,W}");
  }
  TextEmbeddings text;
  text.t = text_path.empty() ? randn(rng, {shapes.m_cat, shapes.d_t})
                             : load_tensor(text_path);
  if (text.t.rank() != 2) throw ShapeError("fuse: text must be rank 2 {M,d_t}");

  FusionParams params = init_fusion_params(x_rgb.shape()[0], x_ir.shape()[0],
                                           text.t.shape()[1], shapes.d_k, rng);
  params.alpha = alpha;
  params.beta = beta;
  params.reduction = parse_reduction(reduction);

  const FusedFeatures fused = fuse_forward(x_rgb, x_ir, text, params);
  json outputs = json::object();
  if (!out_path.empty()) {
    save_tensor(out_path, fused.f_fuse);
    outputs["f_fuse"] = out_path;
  }
  if (!out_att_path.empty()) {
    save_tensor(out_att_path, fused.w_att);
    outputs["w_att"] = out_att_path;
  }
  emit(json{{"subcommand", "fuse"},
            {"seed", seed},
            {"alpha", alpha},
            {"beta", beta},
            {"reduction", reduction},
            {"d_k", shapes.d_k},
            {"x_tilde_ir", tensor_stats(fused.x_tilde_ir)},
            {"w_att", tensor_stats(fused.w_att)},
            {"x_hat_rgb", tensor_stats(fused.x_hat_rgb)},
            {"f_fuse", tensor_stats(fused.f_fuse)},
            {"outputs", outputs}});
  return 0;
}

int run_baseline(const CLI::App& cmd, const std::string& config_path,
                 std::uint64_t seed, ShapeFlags shapes, std::string variant,
                 const std::string& out_path) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--seed", cfg, "seed", seed);
  overlay_shapes(cmd, cfg, shapes);
  if (variant != "vanilla" && variant != "film") {
    throw ParamError("variant must be 'vanilla' or 'film', got '" + variant + "'");
  }

  Rng rng(seed);
  const Tensor x_rgb = randn(rng, {shapes.c_rgb, shapes.height, shapes.width});
  const Tensor x_ir = randn(rng, {shapes.c_ir, shapes.height, shapes.width});
  const Tensor t = randn(rng, {shapes.m_cat, shapes.d_t});
  const BaselineParams params =
      init_baseline_params(shapes.c_rgb, shapes.c_ir, shapes.d_t, shapes.d_k, rng);
  const VanillaFusion vanilla = vanilla_direct_fuse(x_rgb, x_ir, params);
  const Tensor result = variant == "film"
                            ? conditional_prompt_fuse(vanilla.response, t, params)
                            : vanilla.response;
  json outputs = json::object();
  if (!out_path.empty()) {
    save_tensor(out_path, result);
    outputs["response"] = out_path;
  }
  emit(json{{"subcommand", "baseline"},
            {"seed", seed},
            {"variant", variant},
            {"d_k", shapes.d_k},
            {"attention", tensor_stats(vanilla.attention)},
            {"response", tensor_stats(result)},
            {"outputs", outputs}});
  return 0;
}

int run_nmrp(const CLI::App& cmd, const std::string& config_path, std::uint64_t seed,
             std::size_t images, std::string levels_str, SceneSpec spec,
             std::size_t m_cat, std::size_t d_t, std::size_t d_k,
             const std::string& out_csv) {
  const json cfg = load_config(config_path);
  overlay(cmd, "--seed", cfg, "seed", seed);
  overlay(cmd, "--images", cfg, "images", images);
  overlay(cmd, "--scene-width", cfg, "scene_width", spec.width);
  overlay(cmd, "--scene-height", cfg, "scene_height", spec.height);
  overlay(cmd, "--objects", cfg, "objects", spec.objects);
  overlay(cmd, "--mcat", cfg, "m_cat", m_cat);
  overlay(cmd, "--d-t", cfg, "d_t", d_t);
  overlay(cmd, "--d-k", cfg, "d_k", d_k);

  std::vector<int> labels;
  if (cmd.count("--levels") == 0 && cfg.contains("nmrp_levels")) {
    labels = cfg.at("nmrp_levels").get<std::vector<int>>();
  } else {
    std::istringstream ss(levels_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) labels.push_back(std::stoi(tok));
    }
  }
  if (labels.empty()) throw ParamError("nmrp: empty level list");
  if (images == 0) throw ParamError("nmrp: need at least one image");
  const std::vector<DegradationLevel> ladder = levels_from(cfg);

  // One shared text/projection set for the whole population.
  Rng model_rng(Rng::mix(seed, 0));
  const Tensor text = randn(model_rng, {m_cat, d_t});
  const Tensor w_q = randn(model_rng, {d_t, d_k}, 1.0 / std::sqrt(double(d_t)));
  const Tensor w_k_rgb = randn(model_rng, {3, d_k}, 1.0 / std::sqrt(3.0));
  const Tensor w_k_ir = randn(model_rng, {1, d_k});

  std::vector<NmrpImageInput> dataset;
  for (std::size_t i = 0; i < images; ++i) {
    Rng scene_rng(Rng::mix(seed, 1 + i));
    const SynthScene scene = synth_scene(scene_rng, spec);
    const Tensor f_ir = block_mean_features(scene.ir, kNmrpStride);
    NmrpImageInput item;
    item.boxes = scene.boxes;
    for (const int label : labels) {
      const DegradationLevel lv = find_level(ladder, label);
      Rng noise_rng(Rng::mix(Rng::mix(seed, 1 + i), std::uint64_t(label)));
      const Image8 degraded = degrade(scene.rgb, lv, noise_rng);
      const Tensor f_rgb = block_mean_features(degraded, kNmrpStride);
      const Tensor a_rgb = semantic_response(f_rgb, text, w_q, w_k_rgb, d_k);
      const Tensor a_ir = semantic_response(f_ir, text, w_q, w_k_ir, d_k);
      const SupportMaps maps = bi_support(a_ir, a_rgb);
      item.levels.push_back({maps.m_cons, maps.m_dis, f_ir});
    }
    dataset.push_back(std::move(item));
  }

  const NmrpReport report = population_nmrp(dataset, labels);
  const std::string csv = nmrp_csv(report);
  json outputs = json::object();
  if (!out_csv.empty()) {
    write_file(out_csv, csv);
    outputs["csv"] = out_csv;
  }
  json rows = json::array();
  for (const NmrpRow& row : report.rows) {
    rows.push_back(json{{"level", row.level},
                        {"support", row.support},
                        {"region", row.region},
                        {"nmrp", row.nmrp},
                        {"images", row.images}});
  }
  emit(json{{"subcommand", "nmrp"},
            {"seed", seed},
            {"images", report.images},
            {"images_without_boxes", report.images_without_boxes},
            {"levels", labels},
            {"stride", report.stride},
            {"rows", rows},
            {"outputs", outputs}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuselab: numerical laboratory for text-bridged RGB-IR fusion"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::uint64_t seed = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic RGB/IR scene pair");
  SceneSpec synth_spec;
  std::string synth_rgb, synth_ir, synth_boxes;
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--config", config_path, "JSON config file");
  synth->add_option("--width", synth_spec.width, "Canvas width");
  synth->add_option("--height", synth_spec.height, "Canvas height");
  synth->add_option("--objects", synth_spec.objects, "Rectangles to place");
  synth->add_option("--min-size", synth_spec.min_size, "Smallest object side");
  synth->add_option("--max-size", synth_spec.max_size, "Largest object side");
  synth->add_option("--out-rgb", synth_rgb, "PPM output path");
  synth->add_option("--out-ir", synth_ir, "PGM output path");
  synth->add_option("--out-boxes", synth_boxes, "Box annotation JSON path");
  synth->callback([&]() {
    run_synth(*synth, config_path, seed, synth_spec, synth_rgb, synth_ir, synth_boxes);
  });

  // degrade
  auto* degrade_cmd =
      app.add_subcommand("degrade", "Apply one degradation level to an image");
  int degrade_level = 0;
  bool degrade_no_noise = false;
  std::string degrade_in, degrade_out;
  degrade_cmd->add_option("--seed", seed, "Noise seed");
  degrade_cmd->add_option("--config", config_path, "JSON config file");
  degrade_cmd->add_option("--level", degrade_level, "Severity level 0..10")->required();
  degrade_cmd->add_flag("--no-noise", degrade_no_noise, "Skip the additive noise stage");
  degrade_cmd->add_option("input", degrade_in, "Input PGM/PPM")->required();
  degrade_cmd->add_option("output", degrade_out, "Output PGM/PPM")->required();
  degrade_cmd->callback([&]() {
    run_degrade(*degrade_cmd, config_path, seed, degrade_level, degrade_no_noise,
                degrade_in, degrade_out);
  });

  // occupancy
  auto* occ = app.add_subcommand("occupancy", "Otsu foreground occupancy inside boxes");
  std::string occ_image, occ_boxes, occ_box;
  occ->add_option("--image", occ_image, "Single-channel IR image")->required();
  occ->add_option("--boxes", occ_boxes, "JSON array of [x1,y1,x2,y2]");
  occ->add_option("--box", occ_box, "Inline box 'x1,y1,x2,y2'");
  occ->callback([&]() { run_occupancy(occ_image, occ_boxes, occ_box); });

  // flops
  auto* flops = app.add_subcommand("flops", "Attention FLOP counts, analytic and measured");
  std::uint64_t flops_n = 0, flops_m = 4, flops_c = 32;
  bool flops_no_measure = false;
  flops->add_option("--config", config_path, "JSON config file");
  flops->add_option("--n", flops_n, "Spatial positions N = H*W")->required();
  flops->add_option("--mcat", flops_m, "Text categories");
  flops->add_option("--c", flops_c, "Channels");
  flops->add_flag("--no-measure", flops_no_measure,
                  "Skip the instrumented run (analytic only)");
  flops->callback([&]() {
    run_flops(*flops, config_path, flops_n, flops_m, flops_c, flops_no_measure);
  });

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  std::string gc_module, gc_out;
  std::uint64_t gc_seed = 1;
  gc->add_option("--module", gc_module, "bridge-fusion | alignment-head | freq-backbone")
      ->required();
  gc->add_option("--seed", gc_seed, "Parameter seed");
  gc->add_option("--out", gc_out, "CSV report path");
  gc->callback([&]() { run_gradcheck(gc_module, gc_seed, gc_out); });

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Text-bridged fusion forward pass");
  ShapeFlags fuse_shapes;
  double fuse_alpha = 0.5, fuse_beta = 0.5;
  std::string fuse_reduction = "max";
  std::string fuse_xrgb, fuse_xir, fuse_text, fuse_out, fuse_out_att;
  fuse->add_option("--seed", seed, "Input/parameter seed");
  fuse->add_option("--config", config_path, "JSON config file");
  fuse->add_option("--c-rgb", fuse_shapes.c_rgb, "RGB channels");
  fuse->add_option("--c-ir", fuse_shapes.c_ir, "IR channels");
  fuse->add_option("--height", fuse_shapes.height, "Feature height");
  fuse->add_option("--width", fuse_shapes.width, "Feature width");
  fuse->add_option("--mcat", fuse_shapes.m_cat, "Text categories");
  fuse->add_option("--d-t", fuse_shapes.d_t, "Text embedding width");
  fuse->add_option("--d-k", fuse_shapes.d_k, "Attention key width");
  fuse->add_option("--alpha", fuse_alpha, "Discrepancy gain");
  fuse->add_option("--beta", fuse_beta, "Consensus gain");
  fuse->add_option("--reduction", fuse_reduction, "Category reduction: max | mean");
  fuse->add_option("--x-rgb", fuse_xrgb, "RGB feature tensor (BTEN1)");
  fuse->add_option("--x-ir", fuse_xir, "IR feature tensor (BTEN1)");
  fuse->add_option("--text", fuse_text, "Text embedding tensor (BTEN1)");
  fuse->add_option("--out", fuse_out, "Fused tensor output path");
  fuse->add_option("--out-att", fuse_out_att, "Attention gate output path");
  fuse->callback([&]() {
    run_fuse(*fuse, config_path, seed, fuse_shapes, fuse_alpha, fuse_beta,
             fuse_reduction, fuse_xrgb, fuse_xir, fuse_text, fuse_out, fuse_out_att);
  });

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Direct attention fusion baselines");
  ShapeFlags baseline_shapes;
  std::string baseline_variant = "film", baseline_out;
  baseline->add_option("--seed", seed, "Input/parameter seed");
  baseline->add_option("--config", config_path, "JSON config file");
  baseline->add_option("--c-rgb", baseline_shapes.c_rgb, "RGB channels");
  baseline->add_option("--c-ir", baseline_shapes.c_ir, "IR channels");
  baseline->add_option("--height", baseline_shapes.height, "Feature height");
  baseline->add_option("--width", baseline_shapes.width, "Feature width");
  baseline->add_option("--mcat", baseline_shapes.m_cat, "Text categories");
  baseline->add_option("--d-t", baseline_shapes.d_t, "Text embedding width");
  baseline->add_option("--d-k", baseline_shapes.d_k, "Attention key width");
  baseline->add_option("--variant", baseline_variant, "vanilla | film");
  baseline->add_option("--out", baseline_out, "Response tensor output path");
  baseline->callback([&]() {
    run_baseline(*baseline, config_path, seed, baseline_shapes, baseline_variant,
                 baseline_out);
  });

  // nmrp
  auto* nmrp = app.add_subcommand(
      "nmrp", "Population response statistics across degradation levels");
  std::size_t nmrp_images = 3;
  std::string nmrp_levels = "1,4,7,10";
  SceneSpec nmrp_spec;
  std::size_t nmrp_mcat = 4, nmrp_dt = 512, nmrp_dk = 64;
  std::string nmrp_out;
  nmrp->add_option("--seed", seed, "Population seed");
  nmrp->add_option("--config", config_path, "JSON config file");
  nmrp->add_option("--images", nmrp_images, "Synthetic image count");
  nmrp->add_option("--levels", nmrp_levels, "Comma-separated level labels");
  nmrp->add_option("--scene-width", nmrp_spec.width, "Scene width");
  nmrp->add_option("--scene-height", nmrp_spec.height, "Scene height");
  nmrp->add_option("--objects", nmrp_spec.objects, "Objects per scene");
  nmrp->add_option("--mcat", nmrp_mcat, "Text categories");
  nmrp->add_option("--d-t", nmrp_dt, "Text embedding width");
  nmrp->add_option("--d-k", nmrp_dk, "Attention key width");
  nmrp->add_option("--out", nmrp_out, "CSV report path");
  nmrp->callback([&]() {
    run_nmrp(*nmrp, config_path, seed, nmrp_images, nmrp_levels, nmrp_spec, nmrp_mcat,
             nmrp_dt, nmrp_dk, nmrp_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
