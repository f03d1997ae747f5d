#include "bcnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bcnn/error.hpp"
#include "bcnn/image.hpp"
#include "bcnn/rng.hpp"

namespace bcnn {

void AugmentConfig::validate(int image_width) const {
    if (!(rescale_down_factor > 0.0 && rescale_down_factor < 1.0) ||
        !(rescale_up_factor > 0.0 && rescale_up_factor < 1.0)) {
        throw ParamError("augment: rescale factors must be in (0, 1)");
    }
    if (noise_stddev < 0.0) {
        throw ParamError("augment: noise_stddev must be >= 0");
    }
    if (rotation_max_degrees < 0.0 || rotation_max_degrees >= 10.0) {
        throw ParamError("augment: rotation_max_degrees must be in [0, 10)");
    }
    if (translation_max_pixels < 0 ||
        translation_max_pixels * 10 > image_width) {
        throw ParamError("augment: translation_max_pixels must be >= 0 and below 10% of width");
    }
}

Tensor reflect_horizontal(const Tensor& image) {
    const Shape& s = image.shape();
    Tensor out(s);
    for (int b = 0; b < s.batch; ++b) {
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) {
                for (int c = 0; c < s.channels; ++c) {
                    out.at(b, y, x, c) = image.at(b, y, s.width - 1 - x, c);
                }
            }
        }
    }
    return out;
}

Tensor reflect_vertical(const Tensor& image) {
    const Shape& s = image.shape();
    Tensor out(s);
    for (int b = 0; b < s.batch; ++b) {
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) {
                for (int c = 0; c < s.channels; ++c) {
                    out.at(b, y, x, c) = image.at(b, s.height - 1 - y, x, c);
                }
            }
        }
    }
    return out;
}

Tensor add_noise(const Tensor& image, double stddev, Rng& rng) {
    Tensor out = image;
    if (stddev == 0.0) {
        return out;
    }
    for (double& v : out.data()) {
        v = std::clamp(v + rng.normal(stddev), 0.0, 1.0);
    }
    return out;
}

Tensor rotate_small(const Tensor& image, double degrees) {
    if (degrees == 0.0) {
        return image;
    }
    const Shape& s = image.shape();
    Tensor out(s);
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cos_a = std::cos(rad);
    const double sin_a = std::sin(rad);
    const double cy = (s.height - 1) / 2.0;
    const double cx = (s.width - 1) / 2.0;
    for (int b = 0; b < s.batch; ++b) {
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) {
                // inverse mapping: sample the source at the back-rotated point
                const double dy = y - cy;
                const double dx = x - cx;
                const double src_y = cy + cos_a * dy - sin_a * dx;
                const double src_x = cx + sin_a * dy + cos_a * dx;
                const int y0 = static_cast<int>(std::floor(src_y));
                const int x0 = static_cast<int>(std::floor(src_x));
                const double wy = src_y - y0;
                const double wx = src_x - x0;
                for (int c = 0; c < s.channels; ++c) {
                    auto sample = [&](int yy, int xx) {
                        return yy >= 0 && yy < s.height && xx >= 0 && xx < s.width
                                   ? image.at(b, yy, xx, c)
                                   : 0.0;
                    };
                    out.at(b, y, x, c) = (1 - wy) * ((1 - wx) * sample(y0, x0) + wx * sample(y0, x0 + 1)) +
                                         wy * ((1 - wx) * sample(y0 + 1, x0) + wx * sample(y0 + 1, x0 + 1));
                }
            }
        }
    }
    return out;
}

Tensor translate(const Tensor& image, int dx, int dy) {
    if (dx == 0 && dy == 0) {
        return image;
    }
    const Shape& s = image.shape();
    Tensor out(s);
    for (int b = 0; b < s.batch; ++b) {
        for (int y = 0; y < s.height; ++y) {
            const int sy = y - dy;
            if (sy < 0 || sy >= s.height) {
                continue;
            }
            for (int x = 0; x < s.width; ++x) {
                const int sx = x - dx;
                if (sx < 0 || sx >= s.width) {
                    continue;
                }
                for (int c = 0; c < s.channels; ++c) {
                    out.at(b, y, x, c) = image.at(b, sy, sx, c);
                }
            }
        }
    }
    return out;
}

namespace {

Tensor rescale_round_trip(const Tensor& image, double intermediate_h, double intermediate_w) {
    const Shape& s = image.shape();
    const int ih = std::max(1, static_cast<int>(std::lround(intermediate_h)));
    const int iw = std::max(1, static_cast<int>(std::lround(intermediate_w)));
    return resize_bilinear(resize_bilinear(image, ih, iw), s.height, s.width);
}

} // namespace

std::vector<StereoSample> augment(const StereoSample& sample, const AugmentConfig& config) {
    const Shape& s = sample.left_eye.shape();
    config.validate(s.width);

    // one derived stream per pair keyed by the pair id, so dataset order and
    // parallel scheduling cannot change the variants
    Rng rng(derive_seed(config.seed, {fnv1a(sample.pair_id.data(), sample.pair_id.size())}));
    const double angle = rng.uniform_in(-config.rotation_max_degrees, config.rotation_max_degrees);
    const int dx = rng.uniform_int(-config.translation_max_pixels, config.translation_max_pixels);
    const int dy = rng.uniform_int(-config.translation_max_pixels, config.translation_max_pixels);
    // the shared noise field is drawn lazily by add_noise; clone the stream
    // state by drawing a sub-seed so both eyes see identical noise
    Rng noise_probe(derive_seed(config.seed,
                                {fnv1a(sample.pair_id.data(), sample.pair_id.size()), 0x6e6f697365ull}));

    std::vector<StereoSample> variants;
    auto emit = [&](const char* tag, const Tensor& left, const Tensor& right) {
        variants.push_back({left, right, sample.label, sample.pair_id + "#" + tag});
    };

    if (config.horizontal_reflect) {
        Tensor left = reflect_horizontal(sample.left_eye);
        Tensor right = reflect_horizontal(sample.right_eye);
        if (config.reflect_swaps_eyes) {
            std::swap(left, right);
        }
        emit("hreflect", left, right);
    }
    if (config.vertical_reflect) {
        emit("vreflect", reflect_vertical(sample.left_eye), reflect_vertical(sample.right_eye));
    }
    emit("downup",
         rescale_round_trip(sample.left_eye, s.height * config.rescale_down_factor,
                            s.width * config.rescale_down_factor),
         rescale_round_trip(sample.right_eye, s.height * config.rescale_down_factor,
                            s.width * config.rescale_down_factor));
    emit("updown",
         rescale_round_trip(sample.left_eye, s.height / config.rescale_up_factor,
                            s.width / config.rescale_up_factor),
         rescale_round_trip(sample.right_eye, s.height / config.rescale_up_factor,
                            s.width / config.rescale_up_factor));
    {
        Rng left_noise = noise_probe;
        Rng right_noise = noise_probe;
        emit("noise", add_noise(sample.left_eye, config.noise_stddev, left_noise),
             add_noise(sample.right_eye, config.noise_stddev, right_noise));
    }
    emit("rotate", rotate_small(sample.left_eye, angle), rotate_small(sample.right_eye, angle));
    emit("shift", translate(sample.left_eye, dx, dy), translate(sample.right_eye, dx, dy));
    return variants;
}

std::vector<StereoSample> augment_dataset(const std::vector<StereoSample>& samples,
                                          const AugmentConfig& config) {
    std::vector<StereoSample> out;
    for (const StereoSample& s : samples) {
        out.push_back(s);
        for (StereoSample& v : augment(s, config)) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

} // namespace bcnn
