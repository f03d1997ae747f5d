#pragma once

#include <cstdint>
#include <vector>

#include "bcnn/routing.hpp"

namespace bcnn {

/// The stock augmentation set: horizontal/vertical reflection, two rescale
/// round trips (down-up and up-down), additive noise, small rotation and
/// small translation. Each variant applies identical parameters to both
/// eyes of a pair (including the noise field), and each pair draws from its
/// own derived stream, so results do not depend on processing order.
struct AugmentConfig {
    bool horizontal_reflect = true;
    bool vertical_reflect = true;
    /// When reflecting horizontally, also swap eye roles (off: eyes keep
    /// their slots, matching a plain per-image flip).
    bool reflect_swaps_eyes = false;
    double rescale_down_factor = 0.5;  // in (0,1): shrink then restore
    double rescale_up_factor = 0.5;    // in (0,1): restore from 1/f upsample
    double noise_stddev = 0.02;
    double rotation_max_degrees = 3.0; // < 10
    int translation_max_pixels = 4;
    std::uint64_t seed = 0;

    void validate(int image_width) const;
};

/// Variants for one pair: the original is NOT included; pair ids take a
/// '#<transform>' suffix so splits can group variants with their source.
std::vector<StereoSample> augment(const StereoSample& sample, const AugmentConfig& config);

/// Originals plus all variants, originals first per pair.
std::vector<StereoSample> augment_dataset(const std::vector<StereoSample>& samples,
                                          const AugmentConfig& config);

// Individual transforms (exposed for tests and the augment CLI).
Tensor reflect_horizontal(const Tensor& image);
Tensor reflect_vertical(const Tensor& image);
Tensor add_noise(const Tensor& image, double stddev, Rng& rng); // clamps to [0,1]
Tensor rotate_small(const Tensor& image, double degrees);       // bilinear, zero fill
Tensor translate(const Tensor& image, int dx, int dy);          // zero fill

} // namespace bcnn
