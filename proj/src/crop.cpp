#include "rd/crop.hpp"

#include <algorithm>
#include <string>

#include "rd/errors.hpp"

namespace rd::crop {

CropMode crop_mode_from_string(std::string_view s) {
    if (s == "verbatim") return CropMode::Verbatim;
    if (s == "full-coverage") return CropMode::FullCoverage;
    throw Error("unknown crop mode '" + std::string(s) + "' (expected verbatim or full-coverage)");
}

std::string_view to_string(CropMode mode) { return mode == CropMode::Verbatim ? "verbatim" : "full-coverage"; }

CropPlan plan_crops(std::int64_t height, std::int64_t width, CropMode mode) {
    if (height <= 0 || width <= 0)
        throw InvalidGeometry("cannot crop a " + std::to_string(height) + "x" + std::to_string(width) + " image");

    CropPlan plan;
    plan.axis = height >= width ? Axis::Height : Axis::Width;
    const std::int64_t extent = plan.axis == Axis::Height ? height : width;
    const std::int64_t side = plan.axis == Axis::Height ? width : height;

    for (std::int64_t j = 0; side * j < extent; ++j) {
        const std::int64_t start = side * j / 2;
        plan.windows.push_back({start, std::min(start + side, extent)});
    }

    // Verbatim windows stop near the middle of long images, so keep stepping
    // until the far edge is reached; the last window sits flush with it.
    if (mode == CropMode::FullCoverage) {
        for (std::int64_t j = static_cast<std::int64_t>(plan.windows.size()); plan.windows.back().end < extent; ++j) {
            const std::int64_t start = std::min(side * j / 2, extent - side);
            plan.windows.push_back({start, start + side});
        }
    }
    return plan;
}

std::vector<QAExample> apply_plan(const QAExample& parent, const CropPlan& plan) {
    const auto& img = parent.image;
    const std::int64_t extent = plan.axis == Axis::Height ? img.height : img.width;

    std::vector<QAExample> children;
    children.reserve(plan.windows.size());
    for (std::size_t j = 0; j < plan.windows.size(); ++j) {
        const auto& w = plan.windows[j];
        if (w.start < 0 || w.end > extent || w.start >= w.end)
            throw InvalidGeometry("crop window [" + std::to_string(w.start) + ", " + std::to_string(w.end) +
                                  ") does not fit image " + img.id);

        QAExample child;
        child.example_id = parent.example_id + "#c" + std::to_string(j);
        child.subset = parent.subset;
        child.question = parent.question;
        child.gold_answers = parent.gold_answers;
        child.image.id = img.id + "#c" + std::to_string(j);
        child.image.source_uri = img.source_uri;
        child.image.height = plan.axis == Axis::Height ? w.end - w.start : img.height;
        child.image.width = plan.axis == Axis::Width ? w.end - w.start : img.width;
        child.image.crop = Crop{plan.axis, w.start, w.end};

        const bool whole = w.start == 0 && w.end == extent;
        if (whole) {
            child.ocr_text = parent.ocr_text;
            child.ocr_boxes = parent.ocr_boxes;
        } else if (parent.ocr_boxes) {
            std::vector<OcrBox> inside;
            for (const auto& b : *parent.ocr_boxes) {
                const auto lo = plan.axis == Axis::Height ? b.y0 : b.x0;
                const auto hi = plan.axis == Axis::Height ? b.y1 : b.x1;
                if (lo < w.start || hi > w.end) continue;
                OcrBox moved = b;
                if (plan.axis == Axis::Height) {
                    moved.y0 -= w.start;
                    moved.y1 -= w.start;
                } else {
                    moved.x0 -= w.start;
                    moved.x1 -= w.start;
                }
                inside.push_back(std::move(moved));
            }
            std::stable_sort(inside.begin(), inside.end(), [](const OcrBox& a, const OcrBox& b) {
                return std::pair(a.y0, a.x0) < std::pair(b.y0, b.x0);
            });
            for (const auto& b : inside) {
                if (!child.ocr_text.empty()) child.ocr_text += '\n';
                child.ocr_text += b.text;
            }
            child.ocr_boxes = std::move(inside);
        } else if (!parent.ocr_text.empty()) {
            throw MissingBoxes("example " + parent.example_id + " has OCR text but no boxes to restrict to a crop");
        }
        children.push_back(std::move(child));
    }
    return children;
}

}  // namespace rd::crop
