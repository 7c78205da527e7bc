#include "calibforge/regressor.hpp"

#include "calibforge/error.hpp"
#include "calibforge/image_io.hpp"
#include "calibforge/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace calibforge {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using MMap = Eigen::Map<MatrixXd>;

constexpr int kConv1Kernel = 5, kConv1Stride = 2, kConv1Pad = 2;
constexpr int kConv2Kernel = 3, kConv2Stride = 2, kConv2Pad = 1;

int conv_out(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
double elu_grad(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

// Rows: (channel, ky, kx); columns: output positions oy·w_out + ox.
MatrixXd im2col(const double* in, int c, int h, int w, int k, int s, int p, int h_out, int w_out) {
    MatrixXd cols = MatrixXd::Zero(static_cast<Eigen::Index>(c) * k * k, static_cast<Eigen::Index>(h_out) * w_out);
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + ky) * k + kx;
                for (int oy = 0; oy < h_out; ++oy) {
                    const int y = oy * s - p + ky;
                    if (y < 0 || y >= h) continue;
                    for (int ox = 0; ox < w_out; ++ox) {
                        const int x = ox * s - p + kx;
                        if (x < 0 || x >= w) continue;
                        cols(row, static_cast<Eigen::Index>(oy) * w_out + ox) =
                            in[(static_cast<std::size_t>(ch) * h + y) * w + x];
                    }
                }
            }
    return cols;
}

// Adjoint of im2col: scatters column gradients back onto a (c, h, w) buffer.
void col2im(const MatrixXd& cols, double* out, int c, int h, int w, int k, int s, int p, int h_out, int w_out) {
    std::fill(out, out + static_cast<std::size_t>(c) * h * w, 0.0);
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + ky) * k + kx;
                for (int oy = 0; oy < h_out; ++oy) {
                    const int y = oy * s - p + ky;
                    if (y < 0 || y >= h) continue;
                    for (int ox = 0; ox < w_out; ++ox) {
                        const int x = ox * s - p + kx;
                        if (x < 0 || x >= w) continue;
                        out[(static_cast<std::size_t>(ch) * h + y) * w + x] +=
                            cols(row, static_cast<Eigen::Index>(oy) * w_out + ox);
                    }
                }
            }
}

// Activations kept for the backward pass. Feature maps are (channels × positions).
struct Activations {
    MatrixXd cols1, z1, a1;
    MatrixXd cols2, z2, a2;
    VectorXd z3, a3;
    VectorXd out;  // standardized units
};

struct Weights {
    CMap w1, w2, w3, w4;
    Eigen::Map<const VectorXd> b1, b2, b3, b4;
};

Weights weights_of(const Model& m) {
    const auto& c = m.config();
    const auto& l = m.layout();
    const double* p = m.params().data();
    const Eigen::Index k1 = static_cast<Eigen::Index>(c.input_channels()) * kConv1Kernel * kConv1Kernel;
    const Eigen::Index k2 = static_cast<Eigen::Index>(c.conv1_channels) * kConv2Kernel * kConv2Kernel;
    const Eigen::Index f = static_cast<Eigen::Index>(c.conv2_channels) * l.h2 * l.w2;
    return {CMap(p + l.conv1_w, c.conv1_channels, k1),
            CMap(p + l.conv2_w, c.conv2_channels, k2),
            CMap(p + l.dense1_w, c.dense_hidden, f),
            CMap(p + l.dense2_w, c.output_dim(), c.dense_hidden),
            Eigen::Map<const VectorXd>(p + l.conv1_b, c.conv1_channels),
            Eigen::Map<const VectorXd>(p + l.conv2_b, c.conv2_channels),
            Eigen::Map<const VectorXd>(p + l.dense1_b, c.dense_hidden),
            Eigen::Map<const VectorXd>(p + l.dense2_b, c.output_dim())};
}

void check_image(const Model& m, const Tensor& img) {
    const auto& c = m.config();
    if (img.channels != c.input_channels() || img.height != c.input_height || img.width != c.input_width ||
        img.data.size() != static_cast<std::size_t>(img.channels) * img.height * img.width)
        throw InputError("regressor: image is " + std::to_string(img.channels) + "x" + std::to_string(img.height) +
                         "x" + std::to_string(img.width) + ", model expects " + std::to_string(c.input_channels()) +
                         "x" + std::to_string(c.input_height) + "x" + std::to_string(c.input_width));
}

Activations run_forward(const Model& m, const Weights& w, const Tensor& img) {
    const auto& c = m.config();
    const auto& l = m.layout();
    Activations a;
    a.cols1 = im2col(img.data.data(), img.channels, img.height, img.width, kConv1Kernel, kConv1Stride, kConv1Pad,
                     l.h1, l.w1);
    a.z1 = (w.w1 * a.cols1).colwise() + w.b1;
    a.a1 = a.z1.unaryExpr(&elu);
    a.cols2 = im2col(a.a1.data(), c.conv1_channels, l.h1, l.w1, kConv2Kernel, kConv2Stride, kConv2Pad, l.h2, l.w2);
    a.z2 = (w.w2 * a.cols2).colwise() + w.b2;
    a.a2 = a.z2.unaryExpr(&elu);
    const Eigen::Map<const VectorXd> feat(a.a2.data(), a.a2.size());
    a.z3 = w.w3 * feat + w.b3;
    a.a3 = a.z3.unaryExpr(&elu);
    a.out = w.w4 * a.a3 + w.b4;
    return a;
}

// Accumulates parameter gradients for one sample given dL/d(out).
void run_backward(const Model& m, const Weights& w, const Activations& a, const VectorXd& d_out, double* grad) {
    const auto& c = m.config();
    const auto& l = m.layout();
    MMap(grad + l.dense2_w, w.w4.rows(), w.w4.cols()).noalias() += d_out * a.a3.transpose();
    Eigen::Map<VectorXd>(grad + l.dense2_b, d_out.size()) += d_out;

    const VectorXd dz3 = (w.w4.transpose() * d_out).cwiseProduct(a.z3.unaryExpr(&elu_grad));
    const Eigen::Map<const VectorXd> feat(a.a2.data(), a.a2.size());
    MMap(grad + l.dense1_w, w.w3.rows(), w.w3.cols()).noalias() += dz3 * feat.transpose();
    Eigen::Map<VectorXd>(grad + l.dense1_b, dz3.size()) += dz3;

    const VectorXd dfeat = w.w3.transpose() * dz3;
    const MatrixXd dz2 =
        CMap(dfeat.data(), a.a2.rows(), a.a2.cols()).cwiseProduct(a.z2.unaryExpr(&elu_grad));
    MMap(grad + l.conv2_w, w.w2.rows(), w.w2.cols()).noalias() += dz2 * a.cols2.transpose();
    Eigen::Map<VectorXd>(grad + l.conv2_b, dz2.rows()) += dz2.rowwise().sum();

    const MatrixXd dcols2 = w.w2.transpose() * dz2;
    MatrixXd da1(a.a1.rows(), a.a1.cols());
    col2im(dcols2, da1.data(), c.conv1_channels, l.h1, l.w1, kConv2Kernel, kConv2Stride, kConv2Pad, l.h2, l.w2);
    const MatrixXd dz1 = da1.cwiseProduct(a.z1.unaryExpr(&elu_grad));
    MMap(grad + l.conv1_w, w.w1.rows(), w.w1.cols()).noalias() += dz1 * a.cols1.transpose();
    Eigen::Map<VectorXd>(grad + l.conv1_b, dz1.rows()) += dz1.rowwise().sum();
}

// Source taps and weights for an area-averaging resize along one axis.
std::vector<std::vector<std::pair<int, double>>> area_taps(int src, int dst) {
    std::vector<std::vector<std::pair<int, double>>> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        const double lo = d * scale;
        const double hi = (d + 1) * scale;
        for (int s = static_cast<int>(std::floor(lo)); s < std::min(src, static_cast<int>(std::ceil(hi))); ++s) {
            const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
            if (overlap > 0.0) taps[d].emplace_back(s, overlap / scale);
        }
    }
    return taps;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
double get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

constexpr char kModelMagic[4] = {'C', 'F', 'R', 'M'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

int channel_count(ChannelMode m) {
    switch (m) {
        case ChannelMode::Rgb: return 3;
        case ChannelMode::Rgbd: return 4;
        case ChannelMode::Depth: return 1;
    }
    return 0;
}

int point_dim(LabelMode m) { return m == LabelMode::Pixels2D ? 2 : 3; }

ChannelMode parse_channel_mode(const std::string& s) {
    if (s == "rgb") return ChannelMode::Rgb;
    if (s == "rgbd") return ChannelMode::Rgbd;
    if (s == "d") return ChannelMode::Depth;
    throw InputError("unknown channel mode '" + s + "' (expected rgb, rgbd or d)");
}

LabelMode parse_label_mode(const std::string& s) {
    if (s == "2d") return LabelMode::Pixels2D;
    if (s == "3d") return LabelMode::Points3D;
    throw InputError("unknown label mode '" + s + "' (expected 2d or 3d)");
}

const char* to_string(ChannelMode m) {
    switch (m) {
        case ChannelMode::Rgb: return "rgb";
        case ChannelMode::Rgbd: return "rgbd";
        case ChannelMode::Depth: return "d";
    }
    return "?";
}

const char* to_string(LabelMode m) { return m == LabelMode::Pixels2D ? "2d" : "3d"; }

void ModelConfig::validate() const {
    if (input_width < 4 || input_height < 4) throw InputError("model: input must be at least 4x4");
    if (n_electrodes < 1 || conv1_channels < 1 || conv2_channels < 1 || dense_hidden < 1)
        throw InputError("model: layer sizes must be positive");
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    Layout& l = layout_;
    l.h1 = conv_out(cfg_.input_height, kConv1Kernel, kConv1Stride, kConv1Pad);
    l.w1 = conv_out(cfg_.input_width, kConv1Kernel, kConv1Stride, kConv1Pad);
    l.h2 = conv_out(l.h1, kConv2Kernel, kConv2Stride, kConv2Pad);
    l.w2 = conv_out(l.w1, kConv2Kernel, kConv2Stride, kConv2Pad);
    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
        const std::size_t at = off;
        off += n;
        return at;
    };
    const std::size_t c_in = static_cast<std::size_t>(cfg_.input_channels());
    const std::size_t c1 = static_cast<std::size_t>(cfg_.conv1_channels);
    const std::size_t c2 = static_cast<std::size_t>(cfg_.conv2_channels);
    const std::size_t hid = static_cast<std::size_t>(cfg_.dense_hidden);
    const std::size_t out = static_cast<std::size_t>(cfg_.output_dim());
    l.conv1_w = take(c1 * c_in * kConv1Kernel * kConv1Kernel);
    l.conv1_b = take(c1);
    l.conv2_w = take(c2 * c1 * kConv2Kernel * kConv2Kernel);
    l.conv2_b = take(c2);
    l.dense1_w = take(hid * c2 * static_cast<std::size_t>(l.h2 * l.w2));
    l.dense1_b = take(hid);
    l.dense2_w = take(out * hid);
    l.dense2_b = take(out);
    l.total = off;
    params_.assign(l.total, 0.0);
    target_mean_ = VectorXd::Zero(static_cast<Eigen::Index>(out));
    target_std_ = VectorXd::Ones(static_cast<Eigen::Index>(out));
}

Model Model::initialized(const ModelConfig& cfg, std::uint64_t seed) {
    Model m(cfg);
    const Layout& l = m.layout_;
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t at, std::size_t n, double fan_in, double gain) {
        std::normal_distribution<double> g(0.0, std::sqrt(gain / fan_in));
        for (std::size_t i = 0; i < n; ++i) m.params_[at + i] = g(rng);
    };
    const double c_in = m.cfg_.input_channels();
    const double c1 = m.cfg_.conv1_channels;
    const double c2 = m.cfg_.conv2_channels;
    const double hid = m.cfg_.dense_hidden;
    fill(l.conv1_w, l.conv1_b - l.conv1_w, c_in * kConv1Kernel * kConv1Kernel, 2.0);
    fill(l.conv2_w, l.conv2_b - l.conv2_w, c1 * kConv2Kernel * kConv2Kernel, 2.0);
    fill(l.dense1_w, l.dense1_b - l.dense1_w, c2 * l.h2 * l.w2, 2.0);
    fill(l.dense2_w, l.dense2_b - l.dense2_w, hid, 1.0);
    return m;
}

void Model::set_target_normalization(VectorXd mean, VectorXd std) {
    if (mean.size() != cfg_.output_dim() || std.size() != cfg_.output_dim())
        throw InputError("model: normalization size does not match output dimension");
    if (!(std.minCoeff() > 0.0)) throw InputError("model: normalization scales must be positive");
    target_mean_ = std::move(mean);
    target_std_ = std::move(std);
}

VectorXd forward(const Model& model, const Tensor& image) {
    check_image(model, image);
    const Activations a = run_forward(model, weights_of(model), image);
    return a.out.cwiseProduct(model.target_std()) + model.target_mean();
}

LossAndGrad loss_and_grad(const Model& model, const std::vector<Tensor>& images, const LabelMatrix& targets) {
    if (images.empty()) throw InputError("loss_and_grad: empty batch");
    const int d = model.config().output_dim();
    if (targets.rows() != static_cast<Eigen::Index>(images.size()) || targets.cols() != d)
        throw InputError("loss_and_grad: targets must be " + std::to_string(images.size()) + "x" + std::to_string(d));
    const Weights w = weights_of(model);
    LossAndGrad r;
    r.grad.assign(model.params().size(), 0.0);
    const double scale = 1.0 / (static_cast<double>(images.size()) * d);
    for (std::size_t i = 0; i < images.size(); ++i) {
        check_image(model, images[i]);
        const Activations a = run_forward(model, w, images[i]);
        const VectorXd t = (targets.row(static_cast<Eigen::Index>(i)).transpose() - model.target_mean())
                               .cwiseQuotient(model.target_std());
        const VectorXd diff = a.out - t;
        r.loss += diff.squaredNorm() * scale;
        run_backward(model, w, a, 2.0 * scale * diff, r.grad.data());
    }
    return r;
}

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grads, double lr,
               const AdamParams& adam) {
    if (state.m.size() != params.size() || state.v.size() != params.size() || grads.size() != params.size())
        throw InputError("adam_step: state, parameter and gradient sizes differ");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(adam.beta1, t);
    const double c2 = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = adam.beta1 * state.m[i] + (1.0 - adam.beta1) * grads[i];
        state.v[i] = adam.beta2 * state.v[i] + (1.0 - adam.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.eps);
    }
}

void TrainConfig::validate() const {
    if (!(lr0 >= 0.0)) throw InputError("train: lr0 must be non-negative");
    if (batch < 1 || epochs < 1 || halve_every < 1) throw InputError("train: batch, epochs and halve_every must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0))
        throw InputError("train: invalid Adam hyperparameters");
}

double TrainConfig::learning_rate(std::size_t epoch) const {
    return std::ldexp(lr0, -static_cast<int>(epoch / halve_every));
}

LabelMatrix predict(const Model& model, const std::vector<Tensor>& images) {
    LabelMatrix out(static_cast<Eigen::Index>(images.size()), model.config().output_dim());
    for (std::size_t i = 0; i < images.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = forward(model, images[i]).transpose();
    return out;
}

TrainResult train(const Model& initial, const Samples& train_set, const Samples& val_set, const TrainConfig& cfg) {
    cfg.validate();
    const ModelConfig& mc = initial.config();
    if (train_set.size() == 0) throw InputError("train: training set is empty");
    if (val_set.size() == 0) throw InputError("train: validation set is empty");
    for (const Samples* s : {&train_set, &val_set})
        if (s->targets.cols() != mc.output_dim() || s->targets.rows() != static_cast<Eigen::Index>(s->size()))
            throw InputError("train: labels have " + std::to_string(s->targets.cols()) + " outputs, model expects " +
                             std::to_string(mc.output_dim()));

    Model model = initial;
    const VectorXd mean = train_set.targets.colwise().mean().transpose();
    VectorXd sd = ((train_set.targets.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (!(sd(i) > kZeroVarianceThreshold)) sd(i) = 1.0;
    model.set_target_normalization(mean, sd);

    TrainResult result{model, 0, {}};
    double best_mae = std::numeric_limits<double>::infinity();
    AdamState state(model.params().size());
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const int pdim = point_dim(mc.labels);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate(epoch);
        std::mt19937_64 rng(mix_seeds(cfg.rng_seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            std::vector<Tensor> images;
            LabelMatrix targets(static_cast<Eigen::Index>(end - start), mc.output_dim());
            for (std::size_t k = start; k < end; ++k) {
                images.push_back(train_set.images[order[k]]);
                targets.row(static_cast<Eigen::Index>(k - start)) = train_set.targets.row(static_cast<Eigen::Index>(order[k]));
            }
            const LossAndGrad lg = loss_and_grad(model, images, targets);
            loss_sum += lg.loss * static_cast<double>(end - start);
            adam_step(state, model.params(), lg.grad, lr, cfg.adam);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = lr;
        entry.train_loss = loss_sum / static_cast<double>(order.size());
        entry.val = regression_report(predict(model, val_set.images), val_set.targets, pdim);
        if (entry.val.mae_mean < best_mae) {
            best_mae = entry.val.mae_mean;
            result.best = model;
            result.best_epoch = epoch;
        }
        result.log.push_back(entry);
    }
    return result;
}

Tensor make_input(const RgbImage& rgb, const DepthImage& depth, ChannelMode mode, int width, int height) {
    const bool use_rgb = mode != ChannelMode::Depth;
    const bool use_depth = mode != ChannelMode::Rgb;
    const int src_w = use_rgb ? rgb.width : depth.width;
    const int src_h = use_rgb ? rgb.height : depth.height;
    if (use_rgb && use_depth && (rgb.width != depth.width || rgb.height != depth.height))
        throw InputError("make_input: color and depth sizes differ");
    const auto tx = area_taps(src_w, width);
    const auto ty = area_taps(src_h, height);

    Tensor t(channel_count(mode), height, width);
    auto resample = [&](int channel, auto&& source) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (const auto& [sy, wy] : ty[static_cast<std::size_t>(y)])
                    for (const auto& [sx, wx] : tx[static_cast<std::size_t>(x)]) acc += wy * wx * source(sx, sy);
                t.at(channel, y, x) = acc;
            }
    };
    int c = 0;
    if (use_rgb)
        for (int k = 0; k < 3; ++k, ++c) resample(c, [&](int u, int v) { return rgb.pixel(u, v)[k] / 255.0; });
    if (use_depth) resample(c, [&](int u, int v) { return std::clamp<double>(depth.at(u, v), 0.0, 2.0) / 2.0; });
    return t;
}

Samples load_samples(const DatasetManifest& manifest, const ModelConfig& cfg) {
    if (manifest.records.empty()) throw InputError("load_samples: manifest is empty");
    if (static_cast<int>(manifest.electrode_count) * point_dim(cfg.labels) != cfg.output_dim())
        throw InputError("load_samples: manifest has " + std::to_string(manifest.electrode_count) +
                         " electrodes, model expects " + std::to_string(cfg.n_electrodes));
    Samples s;
    s.targets.resize(static_cast<Eigen::Index>(manifest.records.size()), cfg.output_dim());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const ManifestRecord& r = manifest.records[i];
        const bool need_rgb = cfg.channels != ChannelMode::Depth;
        const bool need_depth = cfg.channels != ChannelMode::Rgb;
        const RgbImage rgb = need_rgb ? read_ppm(manifest.resolve(r.rgb).string()) : RgbImage{};
        const DepthImage depth = need_depth ? read_pfm(manifest.resolve(r.depth).string()) : DepthImage{};
        s.images.push_back(make_input(rgb, depth, cfg.channels, cfg.input_width, cfg.input_height));
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t e = 0; e < manifest.electrode_count; ++e) {
            if (cfg.labels == LabelMode::Pixels2D) {
                s.targets(row, static_cast<Eigen::Index>(2 * e)) = r.labels2d[e][0];
                s.targets(row, static_cast<Eigen::Index>(2 * e + 1)) = r.labels2d[e][1];
            } else {
                for (int k = 0; k < 3; ++k) s.targets(row, static_cast<Eigen::Index>(3 * e + k)) = r.labels3d[e](k);
            }
        }
    }
    return s;
}

Samples subset(const Samples& s, const std::vector<std::size_t>& indices) {
    Samples out;
    out.targets.resize(static_cast<Eigen::Index>(indices.size()), s.targets.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.images.push_back(s.images.at(indices[i]));
        out.targets.row(static_cast<Eigen::Index>(i)) = s.targets.row(static_cast<Eigen::Index>(indices[i]));
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double val_fraction,
                                                                           std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InputError("split: validation fraction must be in (0, 1)");
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
    if (n_val < 1 || n_val >= n) throw InputError("split: need at least one training and one validation sample");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(tr.begin(), tr.end());
    return {tr, val};
}

void save_model(const std::filesystem::path& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    const ModelConfig& c = model.config();
    out.write(kModelMagic, 4);
    put_u32(out, kModelVersion);
    for (int v : {c.input_width, c.input_height, c.input_channels(), c.conv1_channels, c.conv2_channels,
                  c.dense_hidden, c.output_dim(), point_dim(c.labels), static_cast<int>(c.channels)})
        put_u32(out, static_cast<std::uint32_t>(v));
    const std::uint64_t n = model.params().size();
    put_u32(out, static_cast<std::uint32_t>(n));
    put_u32(out, static_cast<std::uint32_t>(n >> 32));
    for (double p : model.params()) put_f32(out, p);
    for (Eigen::Index i = 0; i < model.target_mean().size(); ++i) put_f32(out, model.target_mean()(i));
    for (Eigen::Index i = 0; i < model.target_std().size(); ++i) put_f32(out, model.target_std()(i));
    if (!out) throw IoError(path.string(), "write failed");
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0) throw IoError(path.string(), "not a model file");
    if (get_u32(in) != kModelVersion) throw IoError(path.string(), "unsupported model file version");
    std::uint32_t h[9];
    for (auto& v : h) v = get_u32(in);
    if (!in) throw IoError(path.string(), "truncated header");
    ModelConfig c;
    c.input_width = static_cast<int>(h[0]);
    c.input_height = static_cast<int>(h[1]);
    c.conv1_channels = static_cast<int>(h[3]);
    c.conv2_channels = static_cast<int>(h[4]);
    c.dense_hidden = static_cast<int>(h[5]);
    if (h[7] != 2 && h[7] != 3) throw IoError(path.string(), "bad label mode");
    c.labels = h[7] == 2 ? LabelMode::Pixels2D : LabelMode::Points3D;
    if (h[8] > 2) throw IoError(path.string(), "bad channel mode");
    c.channels = static_cast<ChannelMode>(h[8]);
    if (h[6] % h[7] != 0 || static_cast<int>(h[2]) != c.input_channels())
        throw IoError(path.string(), "inconsistent header");
    c.n_electrodes = static_cast<int>(h[6] / h[7]);

    Model m(c);
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t n = lo | (static_cast<std::uint64_t>(get_u32(in)) << 32);
    if (n != m.params().size()) throw IoError(path.string(), "parameter count does not match architecture");
    for (auto& p : m.params()) p = get_f32(in);
    VectorXd mean(c.output_dim()), sd(c.output_dim());
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean(i) = get_f32(in);
    for (Eigen::Index i = 0; i < sd.size(); ++i) sd(i) = get_f32(in);
    if (!in) throw IoError(path.string(), "truncated parameter blob");
    m.set_target_normalization(mean, sd);
    return m;
}

}  // namespace calibforge
