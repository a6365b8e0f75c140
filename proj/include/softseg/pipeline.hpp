#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "softseg/error.hpp"
#include "softseg/image.hpp"
#include "softseg/image_io.hpp"
#include "softseg/labels.hpp"
#include "softseg/manifest.hpp"
#include "softseg/matting.hpp"
#include "softseg/metrics.hpp"
#include "softseg/trimap.hpp"

namespace softseg {

// Every constant the method leaves open lives here, and the CLI mirrors each
// key as a flag.
struct PipelineConfig {
  GrabCutParams grabcut;
  int seed_band = 1;
  int border_frame = 0;  // 0: max(1, 3% of the smaller image dimension)
  MattingParams matting;
  TrimapParams trimap;
  int fg_min_votes = 0;  // 0: all raters (strict intersection)
  double threshold = 128.0 / 255.0;
  HuWindowSpec window;
  std::uint64_t seed = 0;
};

inline void config_from_json(const nlohmann::json& j, PipelineConfig& c) {
  const auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j[key].get<std::decay_t<decltype(target)>>();
  };
  get("grabcut_components", c.grabcut.components);
  get("grabcut_gamma", c.grabcut.gamma);
  get("grabcut_iterations", c.grabcut.iterations);
  get("seed_band", c.seed_band);
  get("border_frame", c.border_frame);
  get("matting_window_radius", c.matting.window_radius);
  get("matting_eps", c.matting.eps);
  get("matting_lambda_c", c.matting.lambda_c);
  get("matting_tol", c.matting.tol);
  get("matting_max_iters", c.matting.max_iters);
  get("se_scale", c.trimap.se_scale);
  if (j.contains("se_shape")) {
    const auto s = j["se_shape"].get<std::string>();
    if (s == "disk") c.trimap.se_shape = StructuringElement::Shape::Disk;
    else if (s == "square") c.trimap.se_shape = StructuringElement::Shape::Square;
    else throw Error("config: se_shape must be \"disk\" or \"square\"");
  }
  get("fg_min_votes", c.fg_min_votes);
  get("threshold", c.threshold);
  get("window_level", c.window.level);
  get("window_width", c.window.width);
  get("seed", c.seed);
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(path + ": " + ex.what());
  }
  PipelineConfig c;
  config_from_json(j, c);
  return c;
}

// Reviewable per-case diagnostics for the generated labels.
struct QualityReport {
  std::string case_id;
  double unknown_fraction = 0.0;
  double max_fg_deviation = 0.0;   // max |1 - alpha| over trimap foreground
  double max_bg_deviation = 0.0;   // max alpha over trimap background
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double trimap_ms = 0.0;
  double matting_ms = 0.0;
};

inline nlohmann::json quality_to_json(const QualityReport& q) {
  return {{"case_id", q.case_id},
          {"unknown_fraction", q.unknown_fraction},
          {"max_fg_deviation", q.max_fg_deviation},
          {"max_bg_deviation", q.max_bg_deviation},
          {"cg_iterations", q.cg_iterations},
          {"cg_residual", q.cg_residual},
          {"trimap_ms", q.trimap_ms},
          {"matting_ms", q.matting_ms}};
}

struct CaseOutcome {
  std::string id;
  bool ok = false;
  std::string error;
  QualityReport report;
};

struct PipelineSummary {
  int processed = 0;
  int succeeded = 0;
  int failed = 0;
  double total_trimap_ms = 0.0;
  double total_matting_ms = 0.0;
  std::vector<CaseOutcome> cases;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Write-then-rename so a crashed run never leaves a truncated artifact.
template <typename WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& write) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write(tmp.string());
  std::filesystem::rename(tmp, path);
}

inline GrayImage load_case_image(const ManifestEntry& entry,
                                 const PipelineConfig& config) {
  LoadedImage loaded = load_image(entry.image_path);
  if (std::holds_alternative<GrayImage>(loaded))
    return std::get<GrayImage>(std::move(loaded));
  const HuWindowSpec w = entry.window.value_or(config.window);
  return hu_window(std::get<RawCtSlice>(loaded), w.level, w.width);
}

inline Trimap build_case_trimap(const ManifestEntry& entry,
                                const GrayImage& image,
                                const PipelineConfig& config) {
  switch (entry.kind) {
    case AnnotationKind::Recist: {
      GrabCutParams gc = config.grabcut;
      gc.seed = config.seed ^ fnv1a(entry.id);
      return trimap_from_recist(image, entry.recist, gc, config.trimap,
                                config.seed_band, config.border_frame);
    }
    case AnnotationKind::MultiRater: {
      std::vector<BinaryMask> masks;
      masks.reserve(entry.rater_paths.size());
      for (const auto& p : entry.rater_paths)
        masks.push_back(load_binary_mask(p));
      return trimap_from_multirater(masks, config.fg_min_votes);
    }
    case AnnotationKind::Binary:
      return trimap_from_binary(load_binary_mask(entry.mask_path),
                                config.trimap);
  }
  throw Error("unknown annotation kind");
}

inline CaseOutcome run_case(const ManifestEntry& entry,
                            const PipelineConfig& config,
                            const std::filesystem::path& out_dir) {
  CaseOutcome outcome;
  outcome.id = entry.id;
  try {
    const GrayImage image = load_case_image(entry, config);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Trimap trimap = build_case_trimap(entry, image, config);
    const auto t1 = clock::now();
    const MatteResult matted = matte(image, trimap, config.matting);

    QualityReport& q = outcome.report;
    q.case_id = entry.id;
    q.trimap_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    q.matting_ms = matted.laplacian_ms + matted.solve_ms;
    q.cg_iterations = matted.cg_iterations;
    q.cg_residual = matted.cg_residual;
    std::size_t unknown = 0;
    for (std::size_t i = 0; i < trimap.size(); ++i) {
      const double a = matted.alpha.data()[i];
      switch (trimap.data()[i]) {
        case TrimapLabel::Unknown: ++unknown; break;
        case TrimapLabel::Foreground:
          q.max_fg_deviation = std::max(q.max_fg_deviation, 1.0 - a);
          break;
        case TrimapLabel::Background:
          q.max_bg_deviation = std::max(q.max_bg_deviation, a);
          break;
      }
    }
    q.unknown_fraction = double(unknown) / double(trimap.size());

    atomic_write(out_dir / (entry.id + "_soft.pgm"), [&](const std::string& p) {
      save_image(matted.alpha, p, BitDepth::Eight);
    });
    atomic_write(out_dir / (entry.id + "_trimap.pgm"),
                 [&](const std::string& p) { save_trimap(trimap, p); });
    atomic_write(out_dir / (entry.id + "_quality.json"),
                 [&](const std::string& p) {
                   std::ofstream out(p);
                   out << quality_to_json(q).dump(2) << "\n";
                 });
    outcome.ok = true;
  } catch (const std::exception& ex) {
    outcome.ok = false;
    outcome.error = ex.what();
  }
  return outcome;
}

}  // namespace detail

// Runs the full labeling pipeline over a manifest. Per-entry failures are
// recorded in the summary and never abort the batch; outputs are
// deterministic for a fixed config seed regardless of the worker count.
inline PipelineSummary run_pipeline(const std::vector<ManifestEntry>& entries,
                                    const PipelineConfig& config,
                                    const std::string& output_dir,
                                    int workers = 1) {
  if (workers < 1) throw Error("run_pipeline: workers must be >= 1");
  const std::filesystem::path out_dir(output_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<CaseOutcome> outcomes(entries.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= entries.size()) break;
      outcomes[i] = detail::run_case(entries[i], config, out_dir);
    }
  };
  if (workers == 1 || entries.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(entries.size()));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  PipelineSummary summary;
  summary.processed = static_cast<int>(entries.size());
  for (auto& o : outcomes) {
    o.ok ? ++summary.succeeded : ++summary.failed;
    if (o.ok) {
      summary.total_trimap_ms += o.report.trimap_ms;
      summary.total_matting_ms += o.report.matting_ms;
    }
    summary.cases.push_back(std::move(o));
  }
  return summary;
}

inline nlohmann::json summary_to_json(const PipelineSummary& s) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : s.cases) {
    nlohmann::json j = {{"id", c.id}, {"ok", c.ok}};
    if (c.ok) j["quality"] = quality_to_json(c.report);
    else j["error"] = c.error;
    cases.push_back(std::move(j));
  }
  return {{"processed", s.processed},
          {"succeeded", s.succeeded},
          {"failed", s.failed},
          {"total_trimap_ms", s.total_trimap_ms},
          {"total_matting_ms", s.total_matting_ms},
          {"cases", std::move(cases)}};
}

}  // namespace softseg
