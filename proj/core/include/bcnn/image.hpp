#pragma once

#include <string>

#include "bcnn/tensor.hpp"

namespace bcnn {

/// Images are single-batch tensors (1, h, w, 3) with channel values in
/// [0, 1]. Readers accept 8-bit RGB PNG and binary PPM (P6, maxval 255);
/// anything else is a DataError naming the path.
Tensor load_image(const std::string& path);

/// Writes PNG or PPM depending on the file extension (.png / .ppm); values
/// are clamped to [0, 1] and quantized to 8 bits.
void save_image(const Tensor& image, const std::string& path);

/// Bilinear resize with endpoint-preserving (align-corners) sampling, so an
/// identity resize returns the input values and corner pixels survive
/// upsampling exactly.
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);

} // namespace bcnn
