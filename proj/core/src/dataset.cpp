#include "bcnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bcnn/error.hpp"
#include "bcnn/image.hpp"
#include "bcnn/rng.hpp"

namespace fs = std::filesystem;

namespace bcnn {

int DatasetManifest::label_of(const std::string& class_name) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == class_name) {
            return static_cast<int>(i);
        }
    }
    throw DataError("manifest: unknown class '" + class_name + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("manifest: cannot open '" + path + "'");
    }
    DatasetManifest manifest;
    manifest.root = fs::path(path).parent_path().string();

    std::string line;
    if (!std::getline(in, line) || line.rfind("bcnn-manifest v1", 0) != 0) {
        throw DataError("manifest: '" + path + "' missing 'bcnn-manifest v1' header");
    }
    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "classes:") {
            std::string name;
            while (fields >> name) {
                manifest.classes.push_back(name);
            }
        } else if (tag == "pair") {
            ManifestEntry entry;
            fields >> entry.pair_id >> entry.class_name >> entry.left_path >> entry.right_path;
            if (entry.right_path.empty()) {
                throw DataError("manifest: malformed pair line '" + line + "'");
            }
            if (!seen_ids.insert(entry.pair_id).second) {
                throw DataError("manifest: duplicate pair id '" + entry.pair_id + "'");
            }
            manifest.entries.push_back(std::move(entry));
        } else {
            throw DataError("manifest: unknown line '" + line + "'");
        }
    }
    if (manifest.classes.empty()) {
        throw DataError("manifest: '" + path + "' declares no classes");
    }
    for (const ManifestEntry& e : manifest.entries) {
        manifest.label_of(e.class_name); // throws on unknown class
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw OutputError("manifest: cannot open '" + path + "' for writing");
    }
    out << "bcnn-manifest v1\n";
    out << "classes:";
    for (const std::string& c : manifest.classes) {
        out << " " << c;
    }
    out << "\n";
    for (const ManifestEntry& e : manifest.entries) {
        out << "pair " << e.pair_id << " " << e.class_name << " " << e.left_path << " "
            << e.right_path << "\n";
    }
    if (!out) {
        throw OutputError("manifest: writing '" + path + "' failed");
    }
}

namespace {

std::string resolve(const std::string& root, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || root.empty()) {
        return path;
    }
    return (fs::path(root) / p).string();
}

} // namespace

std::vector<StereoSample> load_and_resize(const DatasetManifest& manifest, int target_h,
                                          int target_w) {
    std::vector<StereoSample> samples;
    samples.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) {
        StereoSample s;
        s.pair_id = e.pair_id;
        s.label = manifest.label_of(e.class_name);
        s.left_eye = resize_bilinear(load_image(resolve(manifest.root, e.left_path)), target_h,
                                     target_w);
        s.right_eye = resize_bilinear(load_image(resolve(manifest.root, e.right_path)), target_h,
                                      target_w);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::string pair_key(const std::string& pair_id) {
    const std::size_t pos = pair_id.find('#');
    return pos == std::string::npos ? pair_id : pair_id.substr(0, pos);
}

SplitResult split_dataset(const std::vector<StereoSample>& samples, const SplitPlan& plan) {
    if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0)) {
        throw ParamError("split: train_fraction must be in (0, 1)");
    }
    if (samples.empty()) {
        throw DataError("split: empty sample list");
    }

    // distinct source pairs per class, in first-appearance order
    std::map<int, std::vector<std::string>> class_pairs;
    std::map<std::string, int> key_label;
    for (const StereoSample& s : samples) {
        const std::string key = pair_key(s.pair_id);
        const auto [it, inserted] = key_label.try_emplace(key, s.label);
        if (inserted) {
            class_pairs[s.label].push_back(key);
        } else if (it->second != s.label) {
            throw DataError("split: pair '" + key + "' appears with two labels");
        }
    }

    std::set<std::string> train_keys;
    for (auto& [label, keys] : class_pairs) {
        const int n = static_cast<int>(keys.size());
        const int n_train = static_cast<int>(std::lround(plan.train_fraction * n));
        if (n_train < 1 || n_train >= n) {
            throw DataError("split: class " + std::to_string(label) + " has " +
                            std::to_string(n) + " pairs, too few for fraction " +
                            std::to_string(plan.train_fraction));
        }
        Rng rng(derive_seed(plan.seed, {0x73706c6974ull, static_cast<std::uint64_t>(label)}));
        rng.shuffle(keys);
        for (int i = 0; i < n_train; ++i) {
            train_keys.insert(keys[static_cast<std::size_t>(i)]);
        }
    }

    SplitResult result;
    for (const StereoSample& s : samples) {
        (train_keys.contains(pair_key(s.pair_id)) ? result.train : result.test).push_back(s);
    }
    return result;
}

} // namespace bcnn
