#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mlfed {

// Axis-aligned box in corner form. Coordinates are pixels or normalized
// [0,1]; a trace declares its convention once and every box follows it.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
    }
};

// Detection as emitted by a provider, before label unification.
struct RawDetection {
    std::string label;
    double score = 0.0;
    BBox box;
};

// Detection after label unification: category is a group index into the
// grouping table in effect.
struct Detection {
    int group = 0;
    double score = 0.0;
    BBox box;
};

// One image's (possibly ensembled) prediction. Order carries no meaning.
struct ImagePrediction {
    std::vector<Detection> detections;
};

inline double box_area(const BBox& b) {
    return (b.x_max - b.x_min) * (b.y_max - b.y_min);
}

// Intersection over union. Zero-area boxes are legal; a zero-area union
// (two degenerate boxes) yields 0.
inline double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = box_area(a) + box_area(b) - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace mlfed
