#pragma once

#include "calibforge/labeling.hpp"
#include "calibforge/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace calibforge {

enum class ChannelMode { Rgb, Rgbd, Depth };
enum class LabelMode { Pixels2D, Points3D };

int channel_count(ChannelMode m);
int point_dim(LabelMode m);
ChannelMode parse_channel_mode(const std::string& s);  // "rgb" | "rgbd" | "d"
LabelMode parse_label_mode(const std::string& s);      // "2d" | "3d"
const char* to_string(ChannelMode m);
const char* to_string(LabelMode m);

/// Architecture: two strided convolutions (5x5/2 then 3x3/2, "same" padding),
/// a dense hidden layer and a linear output layer, ELU between layers.
struct ModelConfig {
    int input_width = 64;
    int input_height = 64;
    ChannelMode channels = ChannelMode::Rgb;
    LabelMode labels = LabelMode::Pixels2D;
    int n_electrodes = 8;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int dense_hidden = 64;

    int input_channels() const { return channel_count(channels); }
    int output_dim() const { return n_electrodes * point_dim(labels); }
    void validate() const;
};

/// Channel-major (C, H, W) image with values in [0, 1].
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}
    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

class Model {
public:
    struct Layout {
        std::size_t conv1_w, conv1_b, conv2_w, conv2_b, dense1_w, dense1_b, dense2_w, dense2_b, total;
        int h1, w1, h2, w2;
    };

    explicit Model(ModelConfig cfg);

    /// He-style Gaussian weights, zero biases.
    static Model initialized(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const Layout& layout() const { return layout_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Outputs are trained in standardized units: physical = raw·std + mean.
    const Eigen::VectorXd& target_mean() const { return target_mean_; }
    const Eigen::VectorXd& target_std() const { return target_std_; }
    void set_target_normalization(Eigen::VectorXd mean, Eigen::VectorXd std);

private:
    ModelConfig cfg_;
    Layout layout_;
    std::vector<double> params_;
    Eigen::VectorXd target_mean_;
    Eigen::VectorXd target_std_;
};

/// Output in physical label units. Throws InputError when the image shape
/// does not match the model.
Eigen::VectorXd forward(const Model& model, const Tensor& image);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean squared error over batch and outputs, measured in standardized units,
/// with exact backpropagated gradients. targets rows are physical labels.
LossAndGrad loss_and_grad(const Model& model, const std::vector<Tensor>& images, const LabelMatrix& targets);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place.
void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads, double lr,
               const AdamParams& adam = {});

struct TrainConfig {
    double lr0 = 1e-3;
    std::size_t batch = 10;
    std::size_t epochs = 200;
    std::size_t halve_every = 50;
    AdamParams adam;
    std::uint64_t rng_seed = 0;

    void validate() const;
    double learning_rate(std::size_t epoch) const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    RegressionReport val;
};

struct Samples {
    std::vector<Tensor> images;
    LabelMatrix targets;  // physical units, one row per image
    std::size_t size() const { return images.size(); }
};

struct TrainResult {
    Model best;
    std::size_t best_epoch = 0;
    std::vector<EpochLog> log;
};

/// Mini-batch Adam with a seeded per-epoch shuffle and lr = lr0·0.5^⌊epoch/halve_every⌋.
/// Target normalization is fitted on the training set. Returns the
/// parameters with the lowest validation MAE.
TrainResult train(const Model& initial, const Samples& train_set, const Samples& val_set, const TrainConfig& cfg);

LabelMatrix predict(const Model& model, const std::vector<Tensor>& images);

/// Area-averaged resize of a cropped frame to the model input.
Tensor make_input(const RgbImage& rgb, const DepthImage& depth, ChannelMode mode, int width, int height);

/// Loads every record of a manifest as model inputs and physical labels.
Samples load_samples(const DatasetManifest& manifest, const ModelConfig& cfg);
Samples subset(const Samples& s, const std::vector<std::size_t>& indices);

/// Seeded permutation split: returns (train indices, validation indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double val_fraction,
                                                                           std::uint64_t seed);

/// Binary model file: "CFRM", u32 version, u32 dims (see README), u64 count,
/// then little-endian float32 parameters, target means and target stds.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace calibforge
