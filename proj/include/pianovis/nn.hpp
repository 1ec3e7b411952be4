#ifndef PIANOVIS_NN_HPP
#define PIANOVIS_NN_HPP

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pianovis::nn {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    size_t size() const { return data.size(); }
    int dim(int i) const { return shape[i]; }
    static size_t count(const std::vector<int> &shape);
};

enum class LayerKind { Reshape, Conv2D, Conv3D, ReLU, MaxPoolDropout, Flatten, Dense };

// conv2d is fixed 3x3 stride-1 SAME; conv3d kernel spans the whole time axis
// (VALID, collapsing it); pooling is 2x2 stride 2 with ceil (partial edge
// windows), dropout applied after pooling.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int in_channels = 0;  // conv: input channels; dense: input width
    int out_channels = 0; // conv: output channels; dense: output width
    int time_extent = 0;  // conv3d kernel time span
    double dropout_rate = 0.0;
    std::vector<int> dims; // reshape target, excluding the batch axis

    bool operator==(const LayerSpec &o) const = default;
};

struct TrainConfig {
    enum class Loss { Focal, LabelDistribution };
    Loss loss = Loss::Focal;
    int epochs = 30;
    int batch_size = 64;
    // (epoch, rate) knots, piecewise-linear in epoch index.
    std::vector<std::pair<int, double>> lr_schedule{{0, 1e-3}};
    double focal_gamma = 2.0;
    std::vector<double> focal_alpha; // per class; empty = inverse class frequency
    double ld_sigma = 1.0;
    double validation_fraction = 0.1;
    uint64_t seed = 1;
};

struct NetworkWeights {
    int format_version = 1;
    std::vector<LayerSpec> specs;
    std::vector<Tensor> params; // weight,bias per parametrized layer, in order
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct LossResult {
    double loss = 0.0;
    Tensor dlogits;
    Tensor probs;
};

// --- losses (softmax applied internally; gradients w.r.t. logits) ---

Tensor softmax(const Tensor &logits);

LossResult focal_loss(const Tensor &logits, const std::vector<int> &labels, double gamma,
                      const std::vector<double> &alpha);

LossResult label_distribution_loss(const Tensor &logits, const std::vector<int> &labels,
                                   double sigma);

// Discretized, normalized Gaussian over n_classes centered at label.
std::vector<double> gaussian_label_distribution(int label, int n_classes, double sigma);

// --- optimizer ---

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

// Throws "divergence" on non-finite gradients; `where` names the layer.
void adam_step(Tensor &param, const Tensor &grad, AdamState &state, double lr,
               const std::string &where = "");

// --- network ---

class Layer;

class Network {
public:
    explicit Network(const std::vector<LayerSpec> &specs, uint64_t init_seed = 1);
    explicit Network(const NetworkWeights &weights);
    ~Network();
    Network(Network &&) noexcept;
    Network &operator=(Network &&) noexcept;

    Tensor forward(const Tensor &x, bool training, std::mt19937_64 *dropout_rng);
    // Backward for the most recent forward; accumulates parameter grads.
    Tensor backward(const Tensor &dy);

    std::vector<Tensor *> params();
    std::vector<Tensor *> grads();
    void zero_grads();
    // Layer index owning params()[param_index], for diagnostics.
    std::string param_location(size_t param_index) const;

    const std::vector<LayerSpec> &specs() const { return specs_; }
    NetworkWeights snapshot() const;

    // Output shape after every layer for a given input shape (batch axis first).
    std::vector<std::vector<int>> layer_output_shapes(const std::vector<int> &input_shape);

private:
    std::vector<LayerSpec> specs_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// --- training / inference ---

struct TrainResult {
    NetworkWeights weights;
    std::vector<EpochMetrics> metrics;
};

TrainResult train(const std::vector<LayerSpec> &specs, const std::vector<std::vector<float>> &inputs,
                  const std::vector<int> &labels, const TrainConfig &cfg);

std::vector<double> predict(const NetworkWeights &weights, const std::vector<float> &input);
std::vector<double> predict(Network &net, const std::vector<float> &input);

// Text header + little-endian float32 payloads; round-trips bit-exact.
void save_weights(const NetworkWeights &w, const std::string &path);
NetworkWeights load_weights(const std::string &path);

} // namespace pianovis::nn

#endif
