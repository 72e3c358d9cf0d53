#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rd/data_model.hpp"

namespace rd::crop {

enum class CropMode {
    /// Exactly the published sliding-window loop; may leave a tail uncovered.
    Verbatim,
    /// Verbatim windows continued at the same stride until the far edge is
    /// covered; the last window is flush with that edge.
    FullCoverage,
};

CropMode crop_mode_from_string(std::string_view s);
std::string_view to_string(CropMode mode);

struct Window {
    std::int64_t start = 0;
    std::int64_t end = 0;
    bool operator==(const Window&) const = default;
};

/// Square windows along the longer edge, stepping by half the short edge.
struct CropPlan {
    Axis axis = Axis::Height;
    std::vector<Window> windows;

    std::size_t k() const { return windows.size(); }
};

/// Throws InvalidGeometry for non-positive extents.
CropPlan plan_crops(std::int64_t height, std::int64_t width, CropMode mode = CropMode::Verbatim);

/// One child example per window: crop metadata on the image, OCR restricted to
/// boxes lying fully inside the window (translated into child coordinates and
/// ordered top-to-bottom then left-to-right), question and golds copied.
/// Child ids are "<parent>#c<j>". Throws MissingBoxes when the parent has OCR
/// text without boxes and a window does not cover the whole image.
std::vector<QAExample> apply_plan(const QAExample& parent, const CropPlan& plan);

}  // namespace rd::crop
