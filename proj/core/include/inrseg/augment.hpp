#pragma once

#include <array>

#include "inrseg/dataset.hpp"

namespace inrseg {

/// Rigid 2D transform about the image center: rotate by `rotation_deg`
/// (counter-clockwise in (row, col) index space), then shift by
/// `translation_px` = (rows, cols). The image is resampled bilinearly and the
/// mask with nearest neighbour; samples falling outside the source read as
/// intensity 0 / background. Throws InputError for non-2D samples.
Sample augment_rigid(const Sample& sample, double rotation_deg,
                     std::array<double, 2> translation_px);

}  // namespace inrseg
