#include "bcnn/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

Tensor from_rgb8(const std::vector<unsigned char>& rgb, int h, int w) {
    Tensor img(Shape{1, h, w, 3});
    std::span<double> data = img.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = rgb[i] / 255.0;
    }
    return img;
}

std::vector<unsigned char> to_rgb8(const Tensor& image) {
    std::vector<unsigned char> rgb(static_cast<std::size_t>(image.size()));
    std::span<const double> data = image.data();
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const double v = std::clamp(data[i], 0.0, 1.0);
        rgb[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    return rgb;
}

Tensor load_png(const std::string& path) {
    FileHandle file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw DataError("image: cannot open '" + path + "'");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("image: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("image: '" + path + "' is not a valid PNG");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) {
        png_set_strip_16(png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA ||
        (color & PNG_COLOR_MASK_ALPHA) != 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("image: '" + path + "' is not 3-channel RGB");
    }
    png_read_update_info(png, info);
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("image: '" + path + "' is not 3-channel RGB");
    }

    std::vector<unsigned char> rgb(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_rgb8(rgb, static_cast<int>(h), static_cast<int>(w));
}

void save_png(const Tensor& image, const std::string& path) {
    FileHandle file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw OutputError("image: cannot open '" + path + "' for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw OutputError("image: libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw OutputError("image: writing '" + path + "' failed");
    }
    png_init_io(png, file.get());
    const Shape& s = image.shape();
    png_set_IHDR(png, info, static_cast<png_uint_32>(s.width), static_cast<png_uint_32>(s.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> rgb = to_rgb8(image);
    for (int y = 0; y < s.height; ++y) {
        png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * s.width * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("image: cannot open '" + path + "'");
    }
    std::string magic;
    in >> magic;
    if (magic != "P6") {
        throw DataError("image: '" + path + "' is not binary PPM (P6)");
    }
    auto next_value = [&in, &path]() {
        // skip whitespace and # comments between header fields
        for (;;) {
            const int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) {
            throw DataError("image: malformed PPM header in '" + path + "'");
        }
        return v;
    };
    const long w = next_value();
    const long h = next_value();
    const long maxval = next_value();
    if (w < 1 || h < 1) {
        throw DataError("image: malformed PPM header in '" + path + "'");
    }
    if (maxval != 255) {
        throw DataError("image: '" + path + "' has unsupported maxval " + std::to_string(maxval));
    }
    in.get(); // single whitespace after maxval
    std::vector<unsigned char> rgb(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!in) {
        throw DataError("image: '" + path + "' is truncated");
    }
    return from_rgb8(rgb, static_cast<int>(h), static_cast<int>(w));
}

void save_ppm(const Tensor& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw OutputError("image: cannot open '" + path + "' for writing");
    }
    const Shape& s = image.shape();
    out << "P6\n" << s.width << " " << s.height << "\n255\n";
    std::vector<unsigned char> rgb = to_rgb8(image);
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
    if (!out) {
        throw OutputError("image: writing '" + path + "' failed");
    }
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

Tensor load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
        throw DataError("image: cannot open '" + path + "'");
    }
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '6') {
        return load_ppm(path);
    }
    return load_png(path);
}

void save_image(const Tensor& image, const std::string& path) {
    const Shape& s = image.shape();
    if (s.batch != 1 || s.channels != 3) {
        throw ShapeError("image: expected shape (1, h, w, 3), got " + to_string(s));
    }
    if (has_suffix(path, ".ppm")) {
        save_ppm(image, path);
    } else if (has_suffix(path, ".png")) {
        save_png(image, path);
    } else {
        throw OutputError("image: unsupported extension for '" + path + "' (use .png or .ppm)");
    }
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
    const Shape& s = image.shape();
    if (out_h < 1 || out_w < 1) {
        throw ParamError("resize: target dimensions must be >= 1");
    }
    if (out_h == s.height && out_w == s.width) {
        return image;
    }
    Tensor out(Shape{s.batch, out_h, out_w, s.channels});
    const double sy = out_h > 1 ? static_cast<double>(s.height - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(s.width - 1) / (out_w - 1) : 0.0;
    for (int b = 0; b < s.batch; ++b) {
        for (int y = 0; y < out_h; ++y) {
            const double fy = y * sy;
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, s.height - 1);
            const double wy = fy - y0;
            for (int x = 0; x < out_w; ++x) {
                const double fx = x * sx;
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, s.width - 1);
                const double wx = fx - x0;
                for (int c = 0; c < s.channels; ++c) {
                    const double top =
                        (1.0 - wx) * image.at(b, y0, x0, c) + wx * image.at(b, y0, x1, c);
                    const double bottom =
                        (1.0 - wx) * image.at(b, y1, x0, c) + wx * image.at(b, y1, x1, c);
                    out.at(b, y, x, c) = (1.0 - wy) * top + wy * bottom;
                }
            }
        }
    }
    return out;
}

} // namespace bcnn
