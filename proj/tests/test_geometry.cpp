#include <doctest.h>

#include "mlfed/geometry.hpp"
#include "mlfed/rng.hpp"

using namespace mlfed;

namespace {

// Independent IoU oracle on integer-coordinate boxes: count unit cells in
// the intersection and in the union directly, no inclusion-exclusion.
double iou_cell_oracle(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2) {
    auto inside = [](int x, int y, int x1, int y1, int x2, int y2) {
        return x >= x1 && x + 1 <= x2 && y >= y1 && y + 1 <= y2;
    };
    const int lo_x = std::min(ax1, bx1), hi_x = std::max(ax2, bx2);
    const int lo_y = std::min(ay1, by1), hi_y = std::max(ay2, by2);
    long inter = 0, uni = 0;
    for (int x = lo_x; x < hi_x; ++x) {
        for (int y = lo_y; y < hi_y; ++y) {
            const bool in_a = inside(x, y, ax1, ay1, ax2, ay2);
            const bool in_b = inside(x, y, bx1, by1, bx2, by2);
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox make_box(double x1, double y1, double x2, double y2) { return BBox{x1, y1, x2, y2}; }

}  // namespace

TEST_CASE("box_area basics") {
    CHECK(box_area(make_box(0, 0, 2, 2)) == doctest::Approx(4.0));
    CHECK(box_area(make_box(1, 1, 1, 5)) == doctest::Approx(0.0));
    CHECK(box_area(make_box(0.5, 0.5, 2.5, 1.5)) == doctest::Approx(2.0));
}

TEST_CASE("iou known values") {
    CHECK(iou(make_box(0, 0, 2, 2), make_box(0, 0, 2, 2)) == doctest::Approx(1.0));
    CHECK(iou(make_box(0, 0, 1, 1), make_box(2, 2, 3, 3)) == doctest::Approx(0.0));
    // intersection 1, union 7
    CHECK(iou(make_box(0, 0, 2, 2), make_box(1, 1, 3, 3)) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("iou degenerate boxes") {
    const BBox point = make_box(1, 1, 1, 1);
    CHECK(iou(point, point) == 0.0);                       // zero-area union
    CHECK(iou(point, make_box(0, 0, 2, 2)) == 0.0);        // zero intersection area
    CHECK(iou(make_box(0, 0, 0, 5), make_box(0, 0, 0, 5)) == 0.0);
}

TEST_CASE("iou matches cell-counting oracle on random integer boxes") {
    Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        auto draw_box = [&rng]() {
            const int x1 = static_cast<int>(rng.uniform_index(12));
            const int y1 = static_cast<int>(rng.uniform_index(12));
            const int w = static_cast<int>(rng.uniform_index(8));
            const int h = static_cast<int>(rng.uniform_index(8));
            return std::array<int, 4>{x1, y1, x1 + w, y1 + h};
        };
        const auto a = draw_box();
        const auto b = draw_box();
        const double expect = iou_cell_oracle(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]);
        const double got = iou(make_box(a[0], a[1], a[2], a[3]), make_box(b[0], b[1], b[2], b[3]));
        REQUIRE(got == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("iou properties: symmetry, bounds, translation invariance, self") {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        auto draw = [&rng]() {
            const double x1 = rng.uniform(-5, 5);
            const double y1 = rng.uniform(-5, 5);
            return make_box(x1, y1, x1 + rng.uniform(0, 4), y1 + rng.uniform(0, 4));
        };
        const BBox a = draw();
        const BBox b = draw();
        const double v = iou(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(iou(b, a) == doctest::Approx(v).epsilon(1e-12));

        const double tx = rng.uniform(-10, 10), ty = rng.uniform(-10, 10);
        const BBox at = make_box(a.x_min + tx, a.y_min + ty, a.x_max + tx, a.y_max + ty);
        const BBox bt = make_box(b.x_min + tx, b.y_min + ty, b.x_max + tx, b.y_max + ty);
        CHECK(iou(at, bt) == doctest::Approx(v).epsilon(1e-9));

        if (box_area(a) > 0) CHECK(iou(a, a) == doctest::Approx(1.0));
    }
}
