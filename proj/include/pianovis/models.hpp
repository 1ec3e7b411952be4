#ifndef PIANOVIS_MODELS_HPP
#define PIANOVIS_MODELS_HPP

#include "pianovis/geometry.hpp"
#include "pianovis/nn.hpp"

#include <string>
#include <vector>

namespace pianovis {

enum class ModelTask { OnOff, Intensity, IntensityFlow };

struct ModelKind {
    ModelTask task = ModelTask::OnOff;
    KeyColor color = KeyColor::White;
};

// Flattened input width per (task, color): 600/400, 3000/2000, 6000/4000.
int model_input_length(const ModelKind &kind);
int model_output_classes(const ModelKind &kind);

// The concrete layer sequence: [reshape] -> (conv3d for temporal kinds) ->
// conv2d(16) -> relu -> pool -> conv2d(32) -> relu -> pool -> flatten ->
// dense(256) -> relu -> dense(2 or 5).
std::vector<nn::LayerSpec> build_model(const ModelKind &kind, double dropout_rate = 0.25);

// On/off: focal loss, 30 epochs, lr 0.001 -> 0.0001. Intensity kinds:
// label-distribution loss, 15 epochs, fixed lr 0.001.
nn::TrainConfig model_recipe(const ModelKind &kind);

std::string model_task_name(ModelTask task);

} // namespace pianovis

#endif
