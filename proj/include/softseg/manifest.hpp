#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "softseg/error.hpp"
#include "softseg/grabcut.hpp"

namespace softseg {

enum class AnnotationKind { Recist, MultiRater, Binary };

struct HuWindowSpec {
  double level = -600.0;
  double width = 1500.0;
};

// One dataset case: an image plus exactly one weak-annotation source.
struct ManifestEntry {
  std::string id;
  std::string image_path;
  AnnotationKind kind = AnnotationKind::Recist;
  RecistAnnotation recist;                 // kind == Recist
  std::vector<std::string> rater_paths;    // kind == MultiRater
  std::string mask_path;                   // kind == Binary
  std::optional<std::string> ground_truth_path;
  std::optional<HuWindowSpec> window;
};

namespace detail {

inline RecistAnnotation recist_from_numbers(const std::vector<double>& v) {
  if (v.size() != 8)
    throw Error("recist annotation needs 8 numbers "
                "(long x0,y0,x1,y1 then short x0,y0,x1,y1)");
  const auto px = [&](int i) -> PixelCoord {
    return {static_cast<int>(std::lround(v[i])),
            static_cast<int>(std::lround(v[i + 1]))};
  };
  RecistAnnotation a;
  a.long_axis = {px(0), px(2)};
  a.short_axis = {px(4), px(6)};
  return a;
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("manifest entry is not a JSON object");
  ManifestEntry e;
  if (!j.contains("id") || !j["id"].is_string())
    throw Error("manifest entry needs a string \"id\"");
  e.id = j["id"].get<std::string>();
  if (!j.contains("image") || !j["image"].is_string())
    throw Error("manifest entry needs a string \"image\" path");
  e.image_path = j["image"].get<std::string>();

  int kinds = 0;
  if (j.contains("recist")) {
    ++kinds;
    e.kind = AnnotationKind::Recist;
    e.recist = recist_from_numbers(j["recist"].get<std::vector<double>>());
  }
  if (j.contains("multirater")) {
    ++kinds;
    e.kind = AnnotationKind::MultiRater;
    e.rater_paths = j["multirater"].get<std::vector<std::string>>();
    if (e.rater_paths.size() < 2)
      throw Error("multirater annotation needs at least two mask paths");
  }
  if (j.contains("binary")) {
    ++kinds;
    e.kind = AnnotationKind::Binary;
    e.mask_path = j["binary"].get<std::string>();
  }
  if (kinds != 1)
    throw Error("manifest entry needs exactly one of "
                "\"recist\", \"multirater\", \"binary\"");

  if (j.contains("ground_truth"))
    e.ground_truth_path = j["ground_truth"].get<std::string>();
  if (j.contains("window")) {
    const auto& w = j["window"];
    if (!w.is_object() || !w.contains("level") || !w.contains("width"))
      throw Error("window needs \"level\" and \"width\"");
    e.window = HuWindowSpec{w["level"].get<double>(), w["width"].get<double>()};
  }
  return e;
}

}  // namespace detail

// JSON-lines manifest, one entry per line. Errors carry the line number.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest: " + path);

  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e = detail::entry_from_json(j);
      if (!ids.insert(e.id).second)
        throw Error("duplicate case id \"" + e.id + "\"");
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace softseg
