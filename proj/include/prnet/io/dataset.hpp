#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "prnet/train/data.hpp"

namespace prnet {

struct NamedSample {
  std::string id;
  ShadowSample sample;
};

/// Triplet directory convention: <root>/shadow/<id>.png paired with
/// <root>/free/<id>.png and <root>/mask/<id>.png. Entries are returned
/// sorted by id so downstream iteration order is deterministic.
inline std::vector<NamedSample> load_triplet_dir(const std::string& root) {
  namespace fs = std::filesystem;
  const fs::path shadow_dir = fs::path(root) / "shadow";
  if (!fs::is_directory(shadow_dir))
    throw IoError("dataset: missing directory " + shadow_dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(shadow_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".png") continue;
    ids.push_back(entry.path().stem().string());
  }
  if (ids.empty()) throw IoError("dataset: no PNG files under " + shadow_dir.string());
  std::sort(ids.begin(), ids.end());

  std::vector<NamedSample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const fs::path shadow_path = shadow_dir / (id + ".png");
    const fs::path free_path = fs::path(root) / "free" / (id + ".png");
    const fs::path mask_path = fs::path(root) / "mask" / (id + ".png");
    if (!fs::is_regular_file(free_path))
      throw IoError("dataset: missing " + free_path.string());
    if (!fs::is_regular_file(mask_path))
      throw IoError("dataset: missing " + mask_path.string());
    NamedSample ns;
    ns.id = id;
    ns.sample.shadow = image_to_tensor(read_png(shadow_path.string()));
    ns.sample.free = image_to_tensor(read_png(free_path.string()));
    ns.sample.mask = mask_to_tensor(read_png(mask_path.string()));
    const Shape& s = ns.sample.shadow.shape();
    if (!(ns.sample.free.shape() == s) || ns.sample.mask.shape().h != s.h ||
        ns.sample.mask.shape().w != s.w)
      throw DimensionError("dataset: triplet " + id + " is not spatially aligned");
    out.push_back(std::move(ns));
  }
  return out;
}

/// Writes a dataset in the triplet directory convention.
inline void save_triplet_dir(const std::string& root, const std::vector<NamedSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(root) / "shadow");
  fs::create_directories(fs::path(root) / "free");
  fs::create_directories(fs::path(root) / "mask");
  for (const auto& ns : samples) {
    write_png((fs::path(root) / "shadow" / (ns.id + ".png")).string(),
              tensor_to_image(ns.sample.shadow));
    write_png((fs::path(root) / "free" / (ns.id + ".png")).string(),
              tensor_to_image(ns.sample.free));
    write_png((fs::path(root) / "mask" / (ns.id + ".png")).string(),
              mask_to_image(ns.sample.mask));
  }
}

}  // namespace prnet
