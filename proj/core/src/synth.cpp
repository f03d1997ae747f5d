#include "bcnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

struct Color {
    double r = 0, g = 0, b = 0;
};

struct Building {
    double x0 = 0, width = 0, height = 0; // height measured up from the base line
    double nearness = 0;                  // 0 far .. 1 near
    Color facade;
    int window_rows = 0, window_cols = 0;
    std::vector<bool> lit; // per window, row-major
};

struct Blob {
    double cx = 0, cy = 0, sx = 1, sy = 1;
    double nearness = 0;
    double amplitude = 0;
    Color color;
};

struct Scene {
    int class_id = 0;
    Color sky_top, sky_bottom;
    std::vector<Building> buildings;
    std::vector<Blob> blobs;
};

Color random_gray_ish(Rng& rng, double lo, double hi, double tint) {
    const double base = rng.uniform_in(lo, hi);
    return {std::clamp(base + rng.uniform_in(-tint, tint), 0.0, 1.0),
            std::clamp(base + rng.uniform_in(-tint, tint), 0.0, 1.0),
            std::clamp(base + rng.uniform_in(-tint, tint), 0.0, 1.0)};
}

Scene make_building_scene(Rng& rng, const SynthConfig& config) {
    Scene scene;
    scene.class_id = 0;
    scene.sky_top = random_gray_ish(rng, 0.55, 0.8, 0.1);
    scene.sky_bottom = random_gray_ish(rng, 0.35, 0.6, 0.1);
    const int count = rng.uniform_int(2, 4);
    for (int i = 0; i < count; ++i) {
        Building b;
        b.width = rng.uniform_in(0.2, 0.4) * config.width;
        b.x0 = rng.uniform_in(-0.1, 1.1) * config.width - b.width / 2.0;
        b.height = rng.uniform_in(0.45, 0.9) * config.height;
        b.nearness = rng.uniform();
        b.facade = random_gray_ish(rng, 0.25, 0.55, 0.08);
        b.window_rows = rng.uniform_int(3, 7);
        b.window_cols = rng.uniform_int(2, 4);
        b.lit.resize(static_cast<std::size_t>(b.window_rows) * b.window_cols);
        for (std::size_t w = 0; w < b.lit.size(); ++w) {
            b.lit[w] = rng.uniform() < 0.55;
        }
        scene.buildings.push_back(std::move(b));
    }
    // far to near, so near facades overdraw
    std::sort(scene.buildings.begin(), scene.buildings.end(),
              [](const Building& a, const Building& b) { return a.nearness < b.nearness; });
    return scene;
}

Scene make_blob_scene(Rng& rng, const SynthConfig& config) {
    Scene scene;
    scene.class_id = 1;
    scene.sky_top = random_gray_ish(rng, 0.5, 0.75, 0.12);
    scene.sky_bottom = random_gray_ish(rng, 0.3, 0.55, 0.12);
    const bool hard = rng.uniform() < config.hard_fraction;
    if (hard) {
        // jittered grid of small blobs, superficially window-like
        const int rows = rng.uniform_int(3, 5);
        const int cols = rng.uniform_int(2, 4);
        const double nearness = rng.uniform();
        const Color color = random_gray_ish(rng, 0.3, 0.8, 0.15);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                Blob blob;
                blob.cx = (c + 0.5) / cols * config.width + rng.uniform_in(-2.0, 2.0);
                blob.cy = (r + 0.5) / rows * config.height + rng.uniform_in(-2.0, 2.0);
                blob.sx = rng.uniform_in(0.03, 0.06) * config.width;
                blob.sy = rng.uniform_in(0.03, 0.06) * config.height;
                blob.nearness = nearness;
                blob.amplitude = rng.uniform_in(0.25, 0.5);
                blob.color = color;
                scene.blobs.push_back(blob);
            }
        }
    } else {
        const int count = rng.uniform_int(4, 7);
        for (int i = 0; i < count; ++i) {
            Blob blob;
            blob.cx = rng.uniform_in(0.0, 1.0) * config.width;
            blob.cy = rng.uniform_in(0.0, 1.0) * config.height;
            blob.sx = rng.uniform_in(0.08, 0.25) * config.width;
            blob.sy = rng.uniform_in(0.08, 0.25) * config.height;
            blob.nearness = rng.uniform();
            blob.amplitude = rng.uniform_in(0.2, 0.6);
            blob.color = random_gray_ish(rng, 0.2, 0.9, 0.25);
            scene.blobs.push_back(blob);
        }
    }
    return scene;
}

double disparity_px(double nearness, const SynthConfig& config) {
    if (config.max_disparity_fraction == 0.0) {
        return 0.0;
    }
    return config.max_disparity_fraction * config.width * (0.2 + 0.8 * nearness);
}

Tensor render(const Scene& scene, const SynthConfig& config, bool right_eye) {
    Tensor img(Shape{1, config.height, config.width, 3});
    for (int y = 0; y < config.height; ++y) {
        const double t = config.height > 1 ? static_cast<double>(y) / (config.height - 1) : 0.0;
        const Color sky{(1 - t) * scene.sky_top.r + t * scene.sky_bottom.r,
                        (1 - t) * scene.sky_top.g + t * scene.sky_bottom.g,
                        (1 - t) * scene.sky_top.b + t * scene.sky_bottom.b};
        for (int x = 0; x < config.width; ++x) {
            img.at(0, y, x, 0) = sky.r;
            img.at(0, y, x, 1) = sky.g;
            img.at(0, y, x, 2) = sky.b;
        }
    }

    for (const Building& b : scene.buildings) {
        const double shift = right_eye ? disparity_px(b.nearness, config) : 0.0;
        const int x_lo = std::max(0, static_cast<int>(std::lround(b.x0 - shift)));
        const int x_hi = std::min(config.width,
                                  static_cast<int>(std::lround(b.x0 + b.width - shift)));
        const int y_lo = std::max(0, static_cast<int>(std::lround(config.height - b.height)));
        if (x_lo >= x_hi) {
            continue;
        }
        for (int y = y_lo; y < config.height; ++y) {
            for (int x = x_lo; x < x_hi; ++x) {
                img.at(0, y, x, 0) = b.facade.r;
                img.at(0, y, x, 1) = b.facade.g;
                img.at(0, y, x, 2) = b.facade.b;
            }
        }
        // window grid inside the facade, margins of one cell fraction
        const double cell_w = (x_hi - x_lo) / static_cast<double>(2 * b.window_cols + 1);
        const double cell_h = (config.height - y_lo) / static_cast<double>(2 * b.window_rows + 1);
        for (int r = 0; r < b.window_rows; ++r) {
            for (int c = 0; c < b.window_cols; ++c) {
                const bool lit = b.lit[static_cast<std::size_t>(r) * b.window_cols + c];
                const double level =
                    lit ? std::min(1.0, b.facade.g + config.window_contrast)
                        : std::max(0.0, b.facade.g - config.window_contrast);
                const int wy0 = y_lo + static_cast<int>(std::lround((2 * r + 1) * cell_h));
                const int wy1 = y_lo + static_cast<int>(std::lround((2 * r + 2) * cell_h));
                const int wx0 = x_lo + static_cast<int>(std::lround((2 * c + 1) * cell_w));
                const int wx1 = x_lo + static_cast<int>(std::lround((2 * c + 2) * cell_w));
                for (int y = wy0; y < std::min(wy1, config.height); ++y) {
                    for (int x = wx0; x < std::min(wx1, config.width); ++x) {
                        img.at(0, y, x, 0) = level;
                        img.at(0, y, x, 1) = level;
                        img.at(0, y, x, 2) = level;
                    }
                }
            }
        }
    }

    for (const Blob& blob : scene.blobs) {
        const double shift = right_eye ? disparity_px(blob.nearness, config) : 0.0;
        const double cx = blob.cx - shift;
        for (int y = 0; y < config.height; ++y) {
            const double dy = (y - blob.cy) / blob.sy;
            for (int x = 0; x < config.width; ++x) {
                const double dx = (x - cx) / blob.sx;
                const double weight = blob.amplitude * std::exp(-(dx * dx + dy * dy));
                if (weight < 1e-4) {
                    continue;
                }
                img.at(0, y, x, 0) += weight * (blob.color.r - img.at(0, y, x, 0));
                img.at(0, y, x, 1) += weight * (blob.color.g - img.at(0, y, x, 1));
                img.at(0, y, x, 2) += weight * (blob.color.b - img.at(0, y, x, 2));
            }
        }
    }

    for (double& v : img.data()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

} // namespace

std::vector<StereoSample> synthesize_stereo(int n_pairs, int class_id, Rng& rng,
                                            const SynthConfig& config) {
    if (n_pairs < 1) {
        throw ParamError("synth: n_pairs must be >= 1");
    }
    if (class_id != 0 && class_id != 1) {
        throw ParamError("synth: class_id must be 0 or 1");
    }
    std::vector<StereoSample> samples;
    samples.reserve(static_cast<std::size_t>(n_pairs));
    for (int i = 0; i < n_pairs; ++i) {
        const Scene scene = class_id == 0 ? make_building_scene(rng, config)
                                          : make_blob_scene(rng, config);
        StereoSample sample;
        char id[32];
        std::snprintf(id, sizeof id, "c%d-%04d", class_id, i);
        sample.pair_id = id;
        sample.label = class_id;
        sample.left_eye = render(scene, config, false);
        sample.right_eye = render(scene, config, true);
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<StereoSample> synthesize_dataset(int pairs_per_class, std::uint64_t seed,
                                             const SynthConfig& config) {
    Rng rng0(derive_seed(seed, {0x73796e7468ull, 0}));
    Rng rng1(derive_seed(seed, {0x73796e7468ull, 1}));
    std::vector<StereoSample> samples = synthesize_stereo(pairs_per_class, 0, rng0, config);
    std::vector<StereoSample> others = synthesize_stereo(pairs_per_class, 1, rng1, config);
    samples.insert(samples.end(), std::make_move_iterator(others.begin()),
                   std::make_move_iterator(others.end()));
    return samples;
}

} // namespace bcnn
