#ifndef PIANOVIS_FEATURES_HPP
#define PIANOVIS_FEATURES_HPP

#include "pianovis/geometry.hpp"
#include "pianovis/hand_region.hpp"
#include "pianovis/imaging.hpp"
#include "pianovis/optical_flow.hpp"

#include <array>
#include <optional>
#include <vector>

namespace pianovis {

enum class FeatureKind { Single, Stack5, FlowStack5 };

// Key crops are resized to fixed feature images: white keys 10 wide x 60 tall
// (40-tall upper block stacked over the 20-tall lower block), black keys
// 10 x 40. Payloads are the row-major flattenings; stacks concatenate
// oldest-to-newest.
struct FeatureVector {
    int key_id = 0;
    KeyColor color = KeyColor::White;
    FeatureKind kind = FeatureKind::Single;
    int frame_index = 0;
    std::vector<float> payload;
};

constexpr int kFeatureWidth = 10;
constexpr int kWhiteUpperHeight = 40;
constexpr int kWhiteLowerHeight = 20;
constexpr int kWhiteHeight = 60;
constexpr int kBlackHeight = 40;

// Frame offsets before the current frame, oldest last in increasing-offset
// terms; 2/15 s steps at 30 fps are exactly 4 frames.
struct StackSchedule {
    std::array<int, 5> stack5_offsets{16, 12, 8, 4, 0};     // oldest -> newest
    std::array<int, 6> flow_offsets{20, 16, 12, 8, 4, 0};   // oldest -> newest

    static StackSchedule for_fps(double fps);
};

size_t expected_payload_length(KeyColor color, FeatureKind kind);

// Returns nullopt when no hand column overlaps the key's x-extent.
std::optional<FeatureVector> extract_key_feature(const GrayFrame &diff, const KeyRegion &key,
                                                 const HandColumnMask &mask, int bounds_x0,
                                                 int frame_index = 0);

FeatureVector build_stack5(const std::vector<const FeatureVector *> &singles);

struct FlowStackConfig {
    FlowConfig flow;
    float clamp = 2.0f; // flow components clamped to [-clamp, clamp], then scaled to [0,1]
};

FeatureVector build_flowstack5(const std::vector<const FeatureVector *> &singles,
                               const FlowStackConfig &cfg = {});

// Feature image dimensions for a single vector of the given color.
inline int feature_height(KeyColor color) {
    return color == KeyColor::White ? kWhiteHeight : kBlackHeight;
}

} // namespace pianovis

#endif
