#ifndef PIANOVIS_CONFIG_HPP
#define PIANOVIS_CONFIG_HPP

#include "pianovis/dataset.hpp"
#include "pianovis/geometry.hpp"

#include <string>

namespace pianovis {

// Every tunable of the pipeline, loadable from a key=value text file.
// Unknown keys are rejected; values are range-checked on load.
struct PipelineConfig {
    double fps = 30.0;
    LayoutSpec layout{60, 24};
    HoughConfig hough{.threshold = 0}; // non-positive threshold = auto
    RectScoreConfig score;
    HandDetectConfig hand;
    FlowStackConfig flow;
    double dropout_rate = 0.25;
    double focal_gamma = 2.0;
    double ld_sigma = 1.0;
    int batch_size = 64;
    bool debounce = true;
};

PipelineConfig load_config(const std::string &path);
void save_config(const PipelineConfig &cfg, const std::string &path);

} // namespace pianovis

#endif
