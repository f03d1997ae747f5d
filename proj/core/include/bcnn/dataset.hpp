#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcnn/routing.hpp"

namespace bcnn {

/// One line of a dataset manifest.
struct ManifestEntry {
    std::string pair_id;
    std::string class_name;
    std::string left_path;
    std::string right_path;
};

/// Plain-text stereo dataset index. Format (one token group per line):
///   bcnn-manifest v1
///   classes: <name0> <name1> ...
///   pair <id> <class> <left path> <right path>
/// Paths are relative to the manifest's directory unless absolute.
struct DatasetManifest {
    std::vector<std::string> classes;
    std::vector<ManifestEntry> entries;
    std::string root; // directory of the manifest file

    int label_of(const std::string& class_name) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Load every pair, resize both eyes to (target_h, target_w) and scale
/// values to [0, 1]. DataError names the first unreadable path.
std::vector<StereoSample> load_and_resize(const DatasetManifest& manifest, int target_h,
                                          int target_w);

/// Pair-level, class-stratified split. Augmented variants (pair ids with a
/// '#' suffix) follow their source pair, so no variant of a test pair can
/// reach the train side.
struct SplitPlan {
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
};

struct SplitResult {
    std::vector<StereoSample> train;
    std::vector<StereoSample> test;
};

/// Source pair id: everything before the first '#'.
std::string pair_key(const std::string& pair_id);

SplitResult split_dataset(const std::vector<StereoSample>& samples, const SplitPlan& plan);

} // namespace bcnn
