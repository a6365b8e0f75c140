// Command-line front end: trimap generation, matting, label operators,
// metrics, the manifest pipeline and phantom data generation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "softseg/softseg.hpp"

using namespace softseg;

namespace {

struct CommonConfig {
  PipelineConfig config;
  std::string config_path;

  void add_config_flag(CLI::App* app) {
    app->add_option("--config", config_path,
                    "JSON config file; flags override its keys");
  }

  // Called before flag values are applied so flags win over the file.
  void load_file() {
    if (!config_path.empty()) config = softseg::load_config(config_path);
  }
};

RecistAnnotation parse_recist(const std::vector<double>& values) {
  return softseg::detail::recist_from_numbers(values);
}

int cmd_trimap(const std::string& strategy, const std::string& image_path,
               const std::vector<double>& recist_values,
               const std::vector<std::string>& rater_paths,
               const std::string& mask_path, const std::string& out_path,
               CommonConfig& common) {
  const PipelineConfig& cfg = common.config;
  Trimap trimap(0, 0);
  if (strategy == "recist") {
    if (recist_values.empty())
      throw Error("recist strategy needs --recist x0,y0,x1,y1,x0,y0,x1,y1");
    GrayImage image = load_gray(image_path);
    GrabCutParams gc = cfg.grabcut;
    gc.seed = cfg.seed;
    trimap = trimap_from_recist(image, parse_recist(recist_values), gc,
                                cfg.trimap, cfg.seed_band, cfg.border_frame);
  } else if (strategy == "multirater") {
    std::vector<BinaryMask> masks;
    for (const auto& p : rater_paths) masks.push_back(load_binary_mask(p));
    trimap = trimap_from_multirater(masks, cfg.fg_min_votes);
  } else if (strategy == "binary") {
    if (mask_path.empty()) throw Error("binary strategy needs --mask");
    trimap = trimap_from_binary(load_binary_mask(mask_path), cfg.trimap);
  } else {
    throw Error("unknown strategy: " + strategy);
  }
  save_trimap(trimap, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_matte(const std::string& image_path, const std::string& trimap_path,
              const std::string& out_path, BitDepth depth,
              CommonConfig& common) {
  const GrayImage image = load_gray(image_path);
  const Trimap trimap = load_trimap(trimap_path);
  const MatteResult result = matte(image, trimap, common.config.matting);
  save_image(result.alpha, out_path, depth);
  std::cout << "laplacian " << result.laplacian_ms << " ms, solve "
            << result.solve_ms << " ms (" << result.cg_iterations
            << " cg iterations, relative residual " << result.cg_residual
            << ")\n"
            << "wrote " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& pred_paths,
             const std::vector<std::string>& gt_paths,
             const std::vector<std::string>& score_paths,
             const std::vector<std::string>& set_specs,
             const std::string& report_path, const std::string& matrix_path,
             double threshold, bool pooled) {
  nlohmann::json report;

  if (!pred_paths.empty()) {
    if (pred_paths.size() != gt_paths.size())
      throw Error("--pred and --gt need the same number of paths");
    if (!score_paths.empty() && score_paths.size() != gt_paths.size())
      throw Error("--scores and --gt need the same number of paths");

    nlohmann::json cases = nlohmann::json::array();
    double dice_sum = 0.0, iou_sum = 0.0, acc_sum = 0.0;
    ConfusionCounts pooled_counts;
    for (std::size_t i = 0; i < pred_paths.size(); ++i) {
      // Predictions may be soft masks; they are thresholded here. Ground
      // truth is binarized at half intensity.
      const BinaryMask pred = binarize(load_gray(pred_paths[i]), threshold);
      const BinaryMask gt = load_binary_mask(gt_paths[i]);
      const ConfusionCounts c = confusion(pred, gt);
      pooled_counts.tp += c.tp;
      pooled_counts.tn += c.tn;
      pooled_counts.fp += c.fp;
      pooled_counts.fn += c.fn;
      nlohmann::json entry = {{"pred", pred_paths[i]},
                              {"gt", gt_paths[i]},
                              {"dice", dice(c)},
                              {"iou", iou(c)},
                              {"acc", acc(c)},
                              {"both_empty", c.both_empty()}};
      if (!score_paths.empty()) {
        const GrayImage scores = load_gray(score_paths[i]);
        entry["auc"] = auc(scores, gt);
      }
      dice_sum += dice(c);
      iou_sum += iou(c);
      acc_sum += acc(c);
      cases.push_back(std::move(entry));
    }
    const double n = double(pred_paths.size());
    report["cases"] = std::move(cases);
    report["mean"] = {{"dice", dice_sum / n},
                      {"iou", iou_sum / n},
                      {"acc", acc_sum / n}};
    if (pooled)
      report["pooled"] = {{"dice", dice(pooled_counts)},
                          {"iou", iou(pooled_counts)},
                          {"acc", acc(pooled_counts)}};
  }

  if (!set_specs.empty()) {
    std::vector<NamedMaskSet> sets;
    for (const auto& spec : set_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos)
        throw Error("--set expects name=path,path,...");
      NamedMaskSet set;
      set.name = spec.substr(0, eq);
      std::string rest = spec.substr(eq + 1);
      std::size_t pos = 0;
      while (pos != std::string::npos) {
        const auto comma = rest.find(',', pos);
        const std::string p = rest.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!p.empty()) set.masks.push_back(load_binary_mask(p));
        pos = comma == std::string::npos ? comma : comma + 1;
      }
      sets.push_back(std::move(set));
    }
    const DiceMatrix matrix = pairwise_dice(sets);
    if (!matrix_path.empty()) {
      std::ofstream out(matrix_path);
      if (!out) throw Error("cannot write " + matrix_path);
      out << matrix.to_csv();
      std::cout << "wrote " << matrix_path << "\n";
    } else {
      std::cout << matrix.to_csv();
    }
  }

  if (!report.empty()) {
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      if (!out) throw Error("cannot write " + report_path);
      out << report.dump(2) << "\n";
      std::cout << "wrote " << report_path << "\n";
    } else {
      std::cout << report.dump(2) << "\n";
    }
  }
  return 0;
}

int cmd_run(const std::string& manifest_path, const std::string& out_dir,
            int workers, CommonConfig& common) {
  const auto entries = load_manifest(manifest_path);
  const PipelineSummary summary =
      run_pipeline(entries, common.config, out_dir, workers);

  std::filesystem::create_directories(out_dir);
  const auto summary_path = std::filesystem::path(out_dir) / "summary.json";
  {
    std::ofstream out(summary_path);
    out << summary_to_json(summary).dump(2) << "\n";
  }
  for (const auto& c : summary.cases)
    if (!c.ok) std::cerr << c.id << ": " << c.error << "\n";
  std::cout << "processed " << summary.processed << ", succeeded "
            << summary.succeeded << ", failed " << summary.failed << "\n";
  return summary.failed == 0 ? 0 : 1;
}

int cmd_phantom(const std::string& out_dir, int count, int size, double noise,
                std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw Error("cannot write manifest in " + out_dir);

  for (int i = 0; i < count; ++i) {
    const PhantomSpec spec =
        random_phantom_spec(size, size, seed + std::uint64_t(i), noise);
    const Phantom phantom = make_phantom(spec);
    const std::string id = "phantom" + std::to_string(i);
    const std::string image_name = id + ".pgm";
    const std::string truth_name = id + "_gt.pgm";
    save_image(phantom.image, (dir / image_name).string(), BitDepth::Eight);
    save_image(phantom.truth, (dir / truth_name).string(), BitDepth::Eight);

    const auto& r = phantom.recist;
    manifest << nlohmann::json{
                    {"id", id},
                    {"image", (dir / image_name).string()},
                    {"recist",
                     {r.long_axis.p0.x, r.long_axis.p0.y, r.long_axis.p1.x,
                      r.long_axis.p1.y, r.short_axis.p0.x, r.short_axis.p0.y,
                      r.short_axis.p1.x, r.short_axis.p1.y}},
                    {"ground_truth", (dir / truth_name).string()}}
                    .dump()
             << "\n";
  }
  std::cout << "wrote " << count << " phantoms and manifest.jsonl to "
            << out_dir << "\n";
  return 0;
}

void add_config_overrides(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--grabcut-components", cfg.grabcut.components,
                  "GMM components per class");
  app->add_option("--grabcut-gamma", cfg.grabcut.gamma, "smoothness weight");
  app->add_option("--grabcut-iterations", cfg.grabcut.iterations,
                  "grabcut rounds");
  app->add_option("--seed-band", cfg.seed_band,
                  "dilation radius of the RECIST axes seed");
  app->add_option("--border-frame", cfg.border_frame,
                  "background frame width (0 = auto)");
  app->add_option("--matting-window-radius", cfg.matting.window_radius,
                  "matting window radius");
  app->add_option("--matting-eps", cfg.matting.eps, "matting regularizer");
  app->add_option("--matting-lambda-c", cfg.matting.lambda_c,
                  "constraint weight");
  app->add_option("--matting-tol", cfg.matting.tol, "CG relative tolerance");
  app->add_option("--matting-max-iters", cfg.matting.max_iters,
                  "CG iteration cap");
  app->add_option("--se-scale", cfg.trimap.se_scale,
                  "structuring-element scale vs sqrt(mask area)");
  app->add_option("--fg-min-votes", cfg.fg_min_votes,
                  "multirater foreground vote threshold (0 = all raters)");
  app->add_option("--threshold", cfg.threshold, "binarization threshold");
  app->add_option("--window-level", cfg.window.level, "default HU level");
  app->add_option("--window-width", cfg.window.width, "default HU width");
  app->add_option("--seed", cfg.seed, "master random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft segmentation toolkit"};
  app.require_subcommand(1);

  CommonConfig common;

  // trimap
  auto* trimap_cmd =
      app.add_subcommand("trimap", "generate a trimap from one annotation");
  std::string strategy, image_path, mask_path, out_path;
  std::vector<double> recist_values;
  std::vector<std::string> rater_paths;
  trimap_cmd->add_option("--strategy", strategy, "recist|multirater|binary")
      ->required();
  trimap_cmd->add_option("--image", image_path, "input image (recist)");
  trimap_cmd->add_option("--recist", recist_values,
                         "8 numbers: long x0,y0,x1,y1 short x0,y0,x1,y1")
      ->delimiter(',');
  trimap_cmd->add_option("--masks", rater_paths, "rater masks (multirater)");
  trimap_cmd->add_option("--mask", mask_path, "binary mask (binary)");
  trimap_cmd->add_option("--out", out_path, "output trimap image")->required();
  common.add_config_flag(trimap_cmd);
  add_config_overrides(trimap_cmd, common.config);

  // matte
  auto* matte_cmd =
      app.add_subcommand("matte", "solve the alpha matte for a trimap");
  std::string matte_image, matte_trimap, matte_out;
  bool matte_16bit = false;
  matte_cmd->add_option("--image", matte_image, "input image")->required();
  matte_cmd->add_option("--trimap", matte_trimap, "trimap image")->required();
  matte_cmd->add_option("--out", matte_out, "output soft mask")->required();
  matte_cmd->add_flag("--depth16", matte_16bit, "write 16-bit output");
  common.add_config_flag(matte_cmd);
  add_config_overrides(matte_cmd, common.config);

  // soften
  auto* soften_cmd =
      app.add_subcommand("soften", "pixelwise max of soft and binary masks");
  std::string soften_soft, soften_binary_path, soften_out;
  soften_cmd->add_option("--soft", soften_soft, "soft mask")->required();
  soften_cmd->add_option("--binary", soften_binary_path, "binary mask")
      ->required();
  soften_cmd->add_option("--out", soften_out, "output")->required();

  // binarize
  auto* binarize_cmd =
      app.add_subcommand("binarize", "threshold a soft mask");
  std::string binarize_soft, binarize_out;
  double binarize_threshold = 128.0 / 255.0;
  binarize_cmd->add_option("--soft", binarize_soft, "soft mask")->required();
  binarize_cmd->add_option("--threshold", binarize_threshold,
                           "threshold in [0,1], default 128/255");
  binarize_cmd->add_option("--out", binarize_out, "output")->required();

  // consensus
  auto* consensus_cmd =
      app.add_subcommand("consensus", "vote mask from several raters");
  std::vector<std::string> consensus_masks;
  double consensus_fraction = 0.5;
  std::string consensus_out;
  consensus_cmd->add_option("--masks", consensus_masks, "rater masks")
      ->required();
  consensus_cmd->add_option("--fraction", consensus_fraction,
                            "required fraction of raters, default 0.5");
  consensus_cmd->add_option("--out", consensus_out, "output")->required();

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "metrics report and pairwise dice matrix");
  std::vector<std::string> eval_pred, eval_gt, eval_scores, eval_sets;
  std::string eval_report, eval_matrix;
  double eval_threshold = 128.0 / 255.0;
  bool eval_pooled = false;
  eval_cmd->add_option("--pred", eval_pred, "predicted masks");
  eval_cmd->add_option("--gt", eval_gt, "ground-truth masks");
  eval_cmd->add_option("--scores", eval_scores,
                       "soft masks for AUC, aligned with --gt");
  eval_cmd->add_option("--set", eval_sets,
                       "named mask set name=path,path,... (repeatable)");
  eval_cmd->add_option("--report", eval_report, "metrics JSON output path");
  eval_cmd->add_option("--matrix-out", eval_matrix,
                       "pairwise dice CSV output path");
  eval_cmd->add_option("--threshold", eval_threshold, "binarize threshold");
  eval_cmd->add_flag("--pooled", eval_pooled,
                     "also report pooled-pixel metrics");

  // run
  auto* run_cmd = app.add_subcommand("run", "run the manifest pipeline");
  std::string run_manifest, run_out;
  int run_workers = 1;
  run_cmd->add_option("--manifest", run_manifest, "JSON-lines manifest")
      ->required();
  run_cmd->add_option("--out-dir", run_out, "output directory")->required();
  run_cmd->add_option("--workers", run_workers, "parallel workers");
  common.add_config_flag(run_cmd);
  add_config_overrides(run_cmd, common.config);

  // phantom
  auto* phantom_cmd =
      app.add_subcommand("phantom", "generate synthetic test data");
  std::string phantom_out;
  int phantom_count = 10, phantom_size = 64;
  double phantom_noise = 0.05;
  std::uint64_t phantom_seed = 0;
  phantom_cmd->add_option("--out-dir", phantom_out, "output directory")
      ->required();
  phantom_cmd->add_option("--count", phantom_count, "number of phantoms");
  phantom_cmd->add_option("--size", phantom_size, "image side length");
  phantom_cmd->add_option("--noise-sigma", phantom_noise, "noise level");
  phantom_cmd->add_option("--seed", phantom_seed, "master seed");

  try {
    app.parse(argc, argv);

    // If a config file was given, load it as the base and parse again so
    // explicit flags override its keys.
    if (!common.config_path.empty()) {
      common.load_file();
      app.clear();
      app.parse(argc, argv);
    }

    if (trimap_cmd->parsed())
      return cmd_trimap(strategy, image_path, recist_values, rater_paths,
                        mask_path, out_path, common);
    if (matte_cmd->parsed())
      return cmd_matte(matte_image, matte_trimap, matte_out,
                       matte_16bit ? BitDepth::Sixteen : BitDepth::Eight,
                       common);
    if (soften_cmd->parsed()) {
      const SoftMask soft = load_gray(soften_soft);
      const BinaryMask binary = load_binary_mask(soften_binary_path);
      save_image(soften_binary(soft, binary), soften_out);
      std::cout << "wrote " << soften_out << "\n";
      return 0;
    }
    if (binarize_cmd->parsed()) {
      const SoftMask soft = load_gray(binarize_soft);
      save_image(binarize(soft, binarize_threshold), binarize_out);
      std::cout << "wrote " << binarize_out << "\n";
      return 0;
    }
    if (consensus_cmd->parsed()) {
      std::vector<BinaryMask> masks;
      for (const auto& p : consensus_masks) masks.push_back(load_binary_mask(p));
      save_image(consensus(masks, consensus_fraction), consensus_out);
      std::cout << "wrote " << consensus_out << "\n";
      return 0;
    }
    if (eval_cmd->parsed())
      return cmd_eval(eval_pred, eval_gt, eval_scores, eval_sets, eval_report,
                      eval_matrix, eval_threshold, eval_pooled);
    if (run_cmd->parsed()) return cmd_run(run_manifest, run_out, run_workers, common);
    if (phantom_cmd->parsed())
      return cmd_phantom(phantom_out, phantom_count, phantom_size,
                         phantom_noise, phantom_seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
