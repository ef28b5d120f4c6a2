#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"
#include "scribblevs/data/png_io.hpp"
#include "scribblevs/data/synth.hpp"
#include "scribblevs/parallel.hpp"

namespace scribblevs {

struct Manifest {
  int num_classes = 0;
  int ignore_value = kFileIgnoreValue;
  std::map<std::string, std::vector<int>> splits;  // "train"/"val"/"test" -> ids

  const std::vector<int>& split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) {
      throw IoError("manifest has no split named \"" + name + "\"");
    }
    return it->second;
  }
};

namespace detail {

inline std::string sample_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d.png", id);
  return buf;
}

}  // namespace detail

inline std::filesystem::path image_path(const std::filesystem::path& root, int id) {
  return root / "images" / detail::sample_name(id);
}
inline std::filesystem::path mask_path(const std::filesystem::path& root, int id) {
  return root / "masks" / detail::sample_name(id);
}
inline std::filesystem::path scribble_path(const std::filesystem::path& root, int id) {
  return root / "scribbles" / detail::sample_name(id);
}

/// Writes the documented on-disk layout: 16-bit grayscale images, 8-bit
/// grayscale dense masks, indexed scribbles with 255 = unannotated, plus
/// manifest.json naming the splits.
inline void save_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples,
                         const SplitAssignment& splits, int num_classes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  fs::create_directories(root / "scribbles", ec);
  if (!fs::is_directory(root / "images") || !fs::is_directory(root / "masks") ||
      !fs::is_directory(root / "scribbles")) {
    throw IoError("cannot create dataset directories under " + root.string());
  }

  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const int id = static_cast<int>(i);

    U16Image raw(s.image.h, s.image.w);
    for (size_t j = 0; j < s.image.v.size(); ++j) {
      raw.v[j] = static_cast<uint16_t>(std::lround(s.image.v[j] * 65535.0f));
    }
    write_png_gray16(image_path(root, id).string(), raw);
    write_png_gray8(mask_path(root, id).string(), s.dense_mask);

    LabelImage scr(s.height(), s.width());
    for (size_t j = 0; j < s.scribble.labels.size(); ++j) {
      scr.v[j] = s.scribble.labels[j] == kIgnoreLabel ? kFileIgnoreValue : s.scribble.labels[j];
    }
    write_png_indexed(scribble_path(root, id).string(), scr);
  }

  nlohmann::json manifest;
  manifest["num_classes"] = num_classes;
  manifest["ignore_value"] = kFileIgnoreValue;
  manifest["splits"] = {{"train", splits.train}, {"val", splits.val}, {"test", splits.test}};
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write manifest under " + root.string());
  out << manifest.dump(2) << "\n";
}

inline Manifest load_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("missing manifest.json under " + root.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest.json under " + root.string() + ": " + e.what());
  }
  Manifest m;
  if (!j.contains("num_classes") || !j.contains("splits")) {
    throw IoError("manifest.json must contain num_classes and splits");
  }
  m.num_classes = j["num_classes"].get<int>();
  if (m.num_classes < 2) throw IoError("manifest num_classes must be >= 2");
  m.ignore_value = j.value("ignore_value", kFileIgnoreValue);
  for (const auto& [name, ids] : j["splits"].items()) {
    m.splits[name] = ids.get<std::vector<int>>();
  }
  return m;
}

/// Loads one sample from explicit file paths. The image is min-max rescaled
/// to [0,1]; the scribble's file sentinel (255) becomes the in-memory ignore
/// label. The dense mask is optional (empty path → absent, mask left empty).
inline Sample load_sample(const std::string& image_file, const std::string& scribble_file,
                          const std::string& dense_file, int num_classes,
                          int file_ignore_value = kFileIgnoreValue) {
  Sample s;

  const U16Image raw = read_png_gray(image_file);
  uint16_t lo = 65535, hi = 0;
  for (uint16_t v : raw.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.image = Image(raw.h, raw.w);
  const float span = hi > lo ? static_cast<float>(hi - lo) : 1.0f;
  for (size_t j = 0; j < raw.v.size(); ++j) {
    s.image.v[j] = static_cast<float>(raw.v[j] - lo) / span;
  }

  const LabelImage scr = read_png_indexed(scribble_file);
  if (scr.h != s.image.h || scr.w != s.image.w) {
    throw IoError("scribble dims differ from image dims: " + scribble_file);
  }
  s.scribble = ScribbleMask(scr.num_pixels());
  for (size_t j = 0; j < scr.v.size(); ++j) {
    if (scr.v[j] == file_ignore_value) {
      s.scribble.labels[j] = kIgnoreLabel;
    } else if (scr.v[j] >= 0 && scr.v[j] < num_classes) {
      s.scribble.labels[j] = scr.v[j];
    } else {
      throw IoError("scribble class " + std::to_string(scr.v[j]) + " out of range in " + scribble_file);
    }
  }

  if (!dense_file.empty()) {
    s.dense_mask = read_png_gray8(dense_file);
    if (scr.h != s.dense_mask.h || scr.w != s.dense_mask.w) {
      throw IoError("mask dims differ from image dims: " + dense_file);
    }
    for (int32_t v : s.dense_mask.v) {
      if (v < 0 || v >= num_classes) {
        throw IoError("mask class " + std::to_string(v) + " out of range in " + dense_file);
      }
    }
  }
  return s;
}

/// Loads every sample of a named split, decoding samples across
/// SCRIBBLEVS_NUM_WORKERS threads (output is order- and content-identical
/// regardless of the worker count).
inline std::vector<Sample> load_split(const std::filesystem::path& root, const Manifest& manifest,
                                      const std::string& split_name) {
  const std::vector<int>& ids = manifest.split(split_name);
  std::vector<Sample> out(ids.size());
  parallel_for(static_cast<int64_t>(ids.size()), num_workers(), [&](int64_t i) {
    const int id = ids[static_cast<size_t>(i)];
    out[static_cast<size_t>(i)] =
        load_sample(image_path(root, id).string(), scribble_path(root, id).string(),
                    mask_path(root, id).string(), manifest.num_classes, manifest.ignore_value);
  });
  return out;
}

}  // namespace scribblevs
