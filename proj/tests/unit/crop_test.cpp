#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "rd/crop.hpp"
#include "rd/errors.hpp"

using namespace rd;
using crop::CropMode;
using crop::Window;
using rd::testing::make_example;

namespace {

// Line-by-line transcription of the published loop, kept independent of plan_crops.
std::vector<Window> reference_windows(long h, long w) {
    std::vector<Window> out;
    if (h >= w) {
        long j = 0;
        while (w * j < h) {
            long s = (w * j) / 2;
            long e = s + w < h ? s + w : h;
            out.push_back({s, e});
            j = j + 1;
        }
    } else {
        long j = 0;
        while (h * j < w) {
            long s = (h * j) / 2;
            long e = s + h < w ? s + h : w;
            out.push_back({s, e});
            j = j + 1;
        }
    }
    return out;
}

}  // namespace

TEST(PlanCrops, HandWorkedCases) {
    auto square = crop::plan_crops(400, 400, CropMode::Verbatim);
    EXPECT_EQ(square.axis, Axis::Height);
    EXPECT_EQ(square.windows, (std::vector<Window>{{0, 400}}));

    auto tall = crop::plan_crops(1000, 400, CropMode::Verbatim);
    EXPECT_EQ(tall.axis, Axis::Height);
    EXPECT_EQ(tall.windows, (std::vector<Window>{{0, 400}, {200, 600}, {400, 800}}));
    EXPECT_EQ(tall.k(), 3u);

    auto wide = crop::plan_crops(300, 900, CropMode::Verbatim);
    EXPECT_EQ(wide.axis, Axis::Width);
    EXPECT_EQ(wide.windows, (std::vector<Window>{{0, 300}, {150, 450}, {300, 600}}));

    auto full = crop::plan_crops(1000, 400, CropMode::FullCoverage);
    EXPECT_EQ(full.windows, (std::vector<Window>{{0, 400}, {200, 600}, {400, 800}, {600, 1000}}));
}

TEST(PlanCrops, RejectsNonPositiveExtents) {
    EXPECT_THROW(crop::plan_crops(0, 10), InvalidGeometry);
    EXPECT_THROW(crop::plan_crops(10, -1), InvalidGeometry);
}

TEST(PlanCrops, MatchesReferenceLoopAndWindowProperties) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 3000; ++i) {
        const long h = 1 + static_cast<long>(rng() % 2000);
        const long w = 1 + static_cast<long>(rng() % 2000);
        const auto plan = crop::plan_crops(h, w, CropMode::Verbatim);
        ASSERT_EQ(plan.windows, reference_windows(h, w)) << h << "x" << w;
        const long side = std::min(h, w);
        const long extent = std::max(h, w);
        ASSERT_GE(plan.k(), 1u);
        for (std::size_t j = 0; j < plan.k(); ++j) {
            const auto& win = plan.windows[j];
            EXPECT_EQ(win.start, static_cast<long>(side * j / 2));
            EXPECT_LE(win.end - win.start, side);
            if (j + 1 < plan.k()) EXPECT_EQ(win.end - win.start, side);
            if (j > 0 && win.end - win.start == side) {
                // Half the short edge, rounded either way for odd sides.
                const long overlap = plan.windows[j - 1].end - win.start;
                EXPECT_TRUE(overlap == side / 2 || overlap == (side + 1) / 2) << h << "x" << w;
            }
        }

        const auto full = crop::plan_crops(h, w, CropMode::FullCoverage);
        long covered = 0;
        for (const auto& win : full.windows) {
            ASSERT_LE(win.start, covered) << "gap in " << h << "x" << w;
            covered = std::max(covered, win.end);
        }
        EXPECT_EQ(covered, extent);
    }
}

TEST(PlanCrops, VerbatimLeavesTailUncovered) {
    // 1000x400 stops at 800; the final 200 rows are not in any window.
    const auto plan = crop::plan_crops(1000, 400);
    EXPECT_EQ(plan.windows.back().end, 800);
}

TEST(ApplyPlan, SquareImageCopiesOcrWhole) {
    auto e = make_example("sq", 400, 400);
    e.ocr_text = "free text without boxes";
    const auto children = crop::apply_plan(e, crop::plan_crops(400, 400));
    ASSERT_EQ(children.size(), 1u);
    EXPECT_EQ(children[0].ocr_text, e.ocr_text);
    EXPECT_EQ(children[0].image.height, 400);
    EXPECT_EQ(children[0].image.width, 400);
    EXPECT_EQ(children[0].example_id, "sq#c0");
    ASSERT_TRUE(children[0].image.crop);
    EXPECT_EQ(*children[0].image.crop, (Crop{Axis::Height, 0, 400}));
}

TEST(ApplyPlan, KeepsOnlyBoxesFullyInsideWindow) {
    auto e = make_example("tall", 1000, 400);
    e.ocr_boxes = std::vector<OcrBox>{{"bottom", 0, 900, 100, 950}, {"top", 0, 0, 100, 100}, {"straddle", 0, 380, 100, 420}};
    e.ocr_text = "top\nstraddle\nbottom";
    const auto children = crop::apply_plan(e, crop::plan_crops(1000, 400));
    ASSERT_EQ(children.size(), 3u);
    EXPECT_EQ(children[0].ocr_text, "top");
    EXPECT_EQ(children[1].ocr_text, "straddle");
    ASSERT_EQ(children[1].ocr_boxes->size(), 1u);
    EXPECT_EQ((*children[1].ocr_boxes)[0].y0, 180);
    EXPECT_EQ(children[2].ocr_text, "");
    for (const auto& c : children) {
        EXPECT_EQ(c.question, e.question);
        EXPECT_EQ(c.gold_answers, e.gold_answers);
        EXPECT_NO_THROW(c.validate());
    }
}

TEST(ApplyPlan, ReadingOrderIsTopToBottomThenLeftToRight) {
    auto e = make_example("wide", 300, 900);
    e.ocr_boxes = std::vector<OcrBox>{{"c", 200, 50, 250, 60}, {"b", 100, 10, 140, 20}, {"a", 10, 10, 40, 20}};
    e.ocr_text = "a b c";
    const auto children = crop::apply_plan(e, crop::plan_crops(300, 900));
    EXPECT_EQ(children[0].ocr_text, "a\nb\nc");
    EXPECT_EQ(children[1].ocr_text, "c");
}

TEST(ApplyPlan, OcrTextWithoutBoxesIsAnError) {
    auto e = make_example("t", 1000, 400);
    e.ocr_text = "text";
    EXPECT_THROW(crop::apply_plan(e, crop::plan_crops(1000, 400)), MissingBoxes);
}
