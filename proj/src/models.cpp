#include "pianovis/models.hpp"

#include <stdexcept>

namespace pianovis {

using nn::LayerKind;
using nn::LayerSpec;

int model_input_length(const ModelKind &kind) {
    int single = kind.color == KeyColor::White ? 600 : 400;
    switch (kind.task) {
    case ModelTask::OnOff: return single;
    case ModelTask::Intensity: return 5 * single;
    case ModelTask::IntensityFlow: return 10 * single;
    }
    throw std::invalid_argument("model_input_length: unknown task");
}

int model_output_classes(const ModelKind &kind) {
    return kind.task == ModelTask::OnOff ? 2 : 5;
}

std::vector<LayerSpec> build_model(const ModelKind &kind, double dropout_rate) {
    // Feature images are 10 rows; the column count depends on task and color.
    int cols = kind.color == KeyColor::White ? 60 : 40;
    if (kind.task == ModelTask::IntensityFlow) cols *= 2;

    std::vector<LayerSpec> specs;
    auto add = [&](LayerSpec s) { specs.push_back(std::move(s)); };

    if (kind.task == ModelTask::OnOff) {
        add({.kind = LayerKind::Reshape, .dims = {10, cols, 1}});
    } else {
        add({.kind = LayerKind::Reshape, .dims = {5, 10, cols, 1}});
        add({.kind = LayerKind::Conv3D, .in_channels = 1, .out_channels = 16, .time_extent = 5});
    }
    int c_in = kind.task == ModelTask::OnOff ? 1 : 16;
    add({.kind = LayerKind::Conv2D, .in_channels = c_in, .out_channels = 16});
    add({.kind = LayerKind::ReLU});
    add({.kind = LayerKind::MaxPoolDropout, .dropout_rate = dropout_rate});
    add({.kind = LayerKind::Conv2D, .in_channels = 16, .out_channels = 32});
    add({.kind = LayerKind::ReLU});
    add({.kind = LayerKind::MaxPoolDropout, .dropout_rate = dropout_rate});
    add({.kind = LayerKind::Flatten});
    // two ceil-halving pools: 10 -> 5 -> 3 rows
    int flat = 3 * ((cols / 2 + 1) / 2) * 32;
    add({.kind = LayerKind::Dense, .in_channels = flat, .out_channels = 256});
    add({.kind = LayerKind::ReLU});
    add({.kind = LayerKind::Dense, .in_channels = 256, .out_channels = model_output_classes(kind)});
    return specs;
}

nn::TrainConfig model_recipe(const ModelKind &kind) {
    nn::TrainConfig cfg;
    if (kind.task == ModelTask::OnOff) {
        cfg.loss = nn::TrainConfig::Loss::Focal;
        cfg.epochs = 30;
        cfg.lr_schedule = {{0, 1e-3}, {29, 1e-4}};
    } else {
        cfg.loss = nn::TrainConfig::Loss::LabelDistribution;
        cfg.epochs = 15;
        cfg.lr_schedule = {{0, 1e-3}};
    }
    return cfg;
}

std::string model_task_name(ModelTask task) {
    switch (task) {
    case ModelTask::OnOff: return "onoff";
    case ModelTask::Intensity: return "intensity";
    case ModelTask::IntensityFlow: return "intensity-flow";
    }
    return "?";
}

} // namespace pianovis
