#include "pianovis/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pianovis {

StackSchedule StackSchedule::for_fps(double fps) {
    if (fps <= 0) throw std::invalid_argument("StackSchedule: fps must be positive");
    StackSchedule s;
    // 2/15 s per step; offsets rounded to the nearest frame.
    for (int i = 0; i < 5; ++i)
        s.stack5_offsets[i] = static_cast<int>(std::lround((4 - i) * 2.0 / 15.0 * fps));
    for (int i = 0; i < 6; ++i)
        s.flow_offsets[i] = static_cast<int>(std::lround((5 - i) * 2.0 / 15.0 * fps));
    return s;
}

size_t expected_payload_length(KeyColor color, FeatureKind kind) {
    size_t single = static_cast<size_t>(kFeatureWidth) * feature_height(color);
    switch (kind) {
    case FeatureKind::Single: return single;
    case FeatureKind::Stack5: return 5 * single;
    case FeatureKind::FlowStack5: return 10 * single; // 5 maps, x and y components each
    }
    return 0;
}

std::optional<FeatureVector> extract_key_feature(const GrayFrame &diff, const KeyRegion &key,
                                                 const HandColumnMask &mask, int bounds_x0,
                                                 int frame_index) {
    if (!mask.any_in(key.x_begin(), key.x_end(), bounds_x0)) return std::nullopt;

    FeatureVector fv;
    fv.key_id = key.key_id;
    fv.color = key.color;
    fv.kind = FeatureKind::Single;
    fv.frame_index = frame_index;

    if (key.color == KeyColor::White) {
        GrayFrame upper = resize_bilinear(crop(diff, key.upper), kFeatureWidth, kWhiteUpperHeight);
        GrayFrame lower = resize_bilinear(crop(diff, key.lower), kFeatureWidth, kWhiteLowerHeight);
        fv.payload.reserve(expected_payload_length(fv.color, fv.kind));
        fv.payload.insert(fv.payload.end(), upper.data.begin(), upper.data.end());
        fv.payload.insert(fv.payload.end(), lower.data.begin(), lower.data.end());
    } else {
        GrayFrame box = resize_bilinear(crop(diff, key.box), kFeatureWidth, kBlackHeight);
        fv.payload = box.data;
    }
    return fv;
}

namespace {

void check_stack_inputs(const std::vector<const FeatureVector *> &singles, size_t expected,
                        const char *op) {
    if (singles.size() != expected)
        throw std::runtime_error(std::string(op) + ": incomplete history");
    for (const auto *s : singles) {
        if (!s) throw std::runtime_error(std::string(op) + ": incomplete history");
        if (s->kind != FeatureKind::Single)
            throw std::invalid_argument(std::string(op) + ": inputs must be single vectors");
        if (s->key_id != singles[0]->key_id || s->color != singles[0]->color)
            throw std::invalid_argument(std::string(op) + ": inputs must come from one key");
        if (s->payload.size() != expected_payload_length(s->color, FeatureKind::Single))
            throw std::invalid_argument(std::string(op) + ": bad single payload length");
    }
}

GrayFrame to_image(const FeatureVector &fv) {
    GrayFrame img(kFeatureWidth, feature_height(fv.color));
    std::copy(fv.payload.begin(), fv.payload.end(), img.data.begin());
    return img;
}

} // namespace

FeatureVector build_stack5(const std::vector<const FeatureVector *> &singles) {
    check_stack_inputs(singles, 5, "build_stack5");
    FeatureVector out;
    out.key_id = singles[0]->key_id;
    out.color = singles[0]->color;
    out.kind = FeatureKind::Stack5;
    out.frame_index = singles.back()->frame_index;
    out.payload.reserve(expected_payload_length(out.color, out.kind));
    for (const auto *s : singles)
        out.payload.insert(out.payload.end(), s->payload.begin(), s->payload.end());
    return out;
}

FeatureVector build_flowstack5(const std::vector<const FeatureVector *> &singles,
                               const FlowStackConfig &cfg) {
    check_stack_inputs(singles, 6, "build_flowstack5");
    FeatureVector out;
    out.key_id = singles[0]->key_id;
    out.color = singles[0]->color;
    out.kind = FeatureKind::FlowStack5;
    out.frame_index = singles.back()->frame_index;
    out.payload.reserve(expected_payload_length(out.color, out.kind));

    float c = cfg.clamp;
    auto encode = [&](float v) { return (std::clamp(v, -c, c) + c) / (2.0f * c); };
    for (int step = 0; step < 5; ++step) {
        GrayFrame prev = to_image(*singles[step]);
        GrayFrame next = to_image(*singles[step + 1]);
        FlowField fl = dense_flow(prev, next, cfg.flow);
        for (float v : fl.u) out.payload.push_back(encode(v));
        for (float v : fl.v) out.payload.push_back(encode(v));
    }
    return out;
}

} // namespace pianovis
