#pragma once

#include <string>

#include "admgs/pipeline.hpp"

namespace admgs {

// Writes the decomposition layers of a rendered bundle: PFM floats plus
// PNG previews. The illumination layer is defined as the pre-affine
// render divided by max(material, 0.01), so the exported triple satisfies
// render = material ⊙ illumination exactly.
void export_decomposition(const ForwardBundle<float>& bundle,
                          const std::string& out_dir);

// Horizontal strip of equally sized panels.
Image<float> hstrip(const std::vector<Image<float>>& panels);

Image<float> normal_preview(const Image<float>& normal_map);
Image<float> depth_preview(const Image<float>& depth);
Image<float> gray_to_rgb(const Image<float>& gray);

}  // namespace admgs
