#pragma once

// Fully connected networks as alternating linear maps and bias shifts with an
// activation on every hidden layer and none on the output. Includes softmax
// prediction, rescale augmentation, seeded mini-batch SGD training, and a
// versioned binary model container.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nullnet/data_io.hpp"
#include "nullnet/linalg.hpp"
#include "nullnet/rng.hpp"

namespace nullnet {

enum class Activation : std::uint8_t { relu = 0, sigmoid = 1 };

struct Layer {
    Matrix weights;  // n_i x n_{i-1}
    Vector bias;     // n_i
};

/// Layered network with widths (n_0, ..., n_{K+1}) and K >= 1 hidden layers.
struct Network {
    std::vector<std::size_t> widths;
    std::vector<Layer> layers;
    Activation activation = Activation::relu;

    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
    std::size_t hidden_layer_count() const { return widths.size() - 2; }
};

inline void validate_network(const Network& f) {
    if (f.widths.size() < 3)
        throw std::invalid_argument("network: need at least one hidden layer");
    if (f.layers.size() != f.widths.size() - 1)
        throw std::invalid_argument("network: layer count does not match widths");
    for (std::size_t l = 0; l < f.layers.size(); ++l) {
        const Layer& layer = f.layers[l];
        if (layer.weights.rows != f.widths[l + 1] || layer.weights.cols != f.widths[l])
            throw std::invalid_argument("network: weight shape does not match widths");
        if (layer.bias.size() != f.widths[l + 1])
            throw std::invalid_argument("network: bias size does not match widths");
    }
}

namespace detail {

inline double activate(double x, Activation act) {
    if (act == Activation::relu) return x > 0.0 ? x : 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

// Derivative expressed through the stored post-activation value.
inline double activate_grad_from_output(double a, Activation act) {
    if (act == Activation::relu) return a > 0.0 ? 1.0 : 0.0;
    return a * (1.0 - a);
}

}  // namespace detail

/// Evaluate the network: logits of dimension n_{K+1}, no output activation.
inline Vector forward(const Network& f, const Vector& x) {
    if (x.size() != f.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    Vector cur = x;
    for (std::size_t l = 0; l < f.layers.size(); ++l) {
        Vector next = matvec(f.layers[l].weights, cur);
        const Vector& b = f.layers[l].bias;
        const bool hidden = l + 1 < f.layers.size();
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += b[i];
            if (hidden) next[i] = detail::activate(next[i], f.activation);
        }
        cur = std::move(next);
    }
    return cur;
}

struct Prediction {
    int cls = 0;               // argmax, lowest index on ties
    double confidence = 0.0;   // distribution[cls]
    Vector distribution;       // softmax over classes, sums to 1
};

/// Softmax with max-subtraction; argmax tie-break to the lowest index.
inline Prediction predict_from_logits(const Vector& logits) {
    if (logits.empty()) throw std::invalid_argument("predict: empty logits");
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    Prediction p;
    p.distribution.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p.distribution[i] = std::exp(logits[i] - max_logit);
        sum += p.distribution[i];
    }
    int best = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p.distribution[i] /= sum;
        if (p.distribution[i] > p.distribution[best]) best = static_cast<int>(i);
    }
    p.cls = best;
    p.confidence = p.distribution[best];
    return p;
}

inline Prediction predict(const Network& f, const Vector& x) {
    return predict_from_logits(forward(f, x));
}

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double learning_rate = 0.1;
    std::uint64_t seed = 1;
    double rescale_alpha = 0.2;
};

/// Originals plus per-image alpha-scaled copies; labels preserved,
/// rescaled flag set on the copies.
inline LabeledDataset augment_rescale(const LabeledDataset& data, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("augment_rescale: alpha must lie in (0, 1)");
    LabeledDataset out;
    out.height = data.height;
    out.width = data.width;
    out.source = data.source;
    out.images.reserve(2 * data.size());
    out.labels.reserve(2 * data.size());
    out.rescaled.reserve(2 * data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.images.push_back(data.images[i]);
        out.labels.push_back(data.labels[i]);
        out.rescaled.push_back(data.rescaled.empty() ? 0 : data.rescaled[i]);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.images.push_back(scaled(data.images[i], alpha));
        out.labels.push_back(data.labels[i]);
        out.rescaled.push_back(1);
    }
    return out;
}

/// Mini-batch SGD (momentum 0.9) on softmax cross-entropy over the originals
/// plus their rescaled copies. Deterministic for a fixed config and seed.
inline Network train(const LabeledDataset& data, const std::vector<std::size_t>& widths,
                     const TrainConfig& cfg,
                     const std::function<void(std::size_t, double)>& on_epoch = {}) {
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (widths.size() < 3) throw std::invalid_argument("train: need at least one hidden layer");
    if (cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0))
        throw std::invalid_argument("train: epochs, batch size and learning rate must be positive");
    const std::size_t in_dim = widths.front();
    const std::size_t n_classes = widths.back();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.images[i].size() != in_dim)
            throw std::invalid_argument("train: image dimension does not match widths");
        if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= n_classes)
            throw std::invalid_argument("train: label out of range for output width");
    }

    const LabeledDataset full = augment_rescale(data, cfg.rescale_alpha);

    Network f;
    f.widths = widths;
    f.activation = Activation::relu;
    Rng rng(cfg.seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(widths[l + 1], widths[l]);
        const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
        for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
        layer.bias.assign(widths[l + 1], 0.0);
        f.layers.push_back(std::move(layer));
    }

    const std::size_t n_layers = f.layers.size();
    constexpr double kMomentum = 0.9;
    std::vector<Matrix> vel_w;
    std::vector<Vector> vel_b;
    std::vector<Matrix> grad_w;
    std::vector<Vector> grad_b;
    for (const Layer& layer : f.layers) {
        vel_w.emplace_back(layer.weights.rows, layer.weights.cols);
        vel_b.emplace_back(layer.bias.size(), 0.0);
        grad_w.emplace_back(layer.weights.rows, layer.weights.cols);
        grad_b.emplace_back(layer.bias.size(), 0.0);
    }

    // Per-sample activation buffers, reused across batches: act[0] aliases the
    // input image, act[l] holds layer l's post-activation (logits for the top).
    const std::size_t batch = cfg.batch_size;
    std::vector<std::vector<double>> act(n_layers + 1), delta(n_layers + 1);
    for (std::size_t l = 0; l <= n_layers; ++l) {
        act[l].resize(batch * widths[l]);
        delta[l].resize(batch * widths[l]);
    }

    std::vector<std::size_t> order(full.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < full.size(); start += batch) {
            const std::size_t bsz = std::min(batch, full.size() - start);

            for (std::size_t b = 0; b < bsz; ++b) {
                const Vector& img = full.images[order[start + b]];
                std::memcpy(&act[0][b * in_dim], img.data(), in_dim * sizeof(double));
            }

            // forward
            for (std::size_t l = 0; l < n_layers; ++l) {
                const Matrix& w = f.layers[l].weights;
                const Vector& bias = f.layers[l].bias;
                const std::size_t nin = w.cols, nout = w.rows;
                const bool hidden = l + 1 < n_layers;
                for (std::size_t b = 0; b < bsz; ++b) {
                    const double* src = &act[l][b * nin];
                    double* dst = &act[l + 1][b * nout];
                    for (std::size_t i = 0; i < nout; ++i) {
                        const double* wrow = &w.data[i * nin];
                        double acc = bias[i];
                        for (std::size_t j = 0; j < nin; ++j) acc += wrow[j] * src[j];
                        dst[i] = hidden ? detail::activate(acc, f.activation) : acc;
                    }
                }
            }

            // softmax cross-entropy gradient at the logits
            const double inv_bsz = 1.0 / static_cast<double>(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                const double* logits = &act[n_layers][b * n_classes];
                double* d = &delta[n_layers][b * n_classes];
                double max_logit = logits[0];
                for (std::size_t i = 1; i < n_classes; ++i)
                    max_logit = std::max(max_logit, logits[i]);
                double sum = 0.0;
                for (std::size_t i = 0; i < n_classes; ++i) {
                    d[i] = std::exp(logits[i] - max_logit);
                    sum += d[i];
                }
                const int label = full.labels[order[start + b]];
                for (std::size_t i = 0; i < n_classes; ++i) {
                    d[i] /= sum;
                    if (static_cast<int>(i) == label) {
                        loss_sum -= std::log(std::max(d[i], 1e-300));
                        d[i] -= 1.0;
                    }
                    d[i] *= inv_bsz;
                }
            }

            // backward
            for (std::size_t l = n_layers; l-- > 0;) {
                const Matrix& w = f.layers[l].weights;
                const std::size_t nin = w.cols, nout = w.rows;
                std::fill(grad_w[l].data.begin(), grad_w[l].data.end(), 0.0);
                std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0);
                if (l > 0) std::fill(delta[l].begin(), delta[l].begin() + bsz * nin, 0.0);
                for (std::size_t b = 0; b < bsz; ++b) {
                    const double* src = &act[l][b * nin];
                    const double* d = &delta[l + 1][b * nout];
                    double* dprev = l > 0 ? &delta[l][b * nin] : nullptr;
                    for (std::size_t i = 0; i < nout; ++i) {
                        const double g = d[i];
                        if (g == 0.0) continue;
                        double* gw = &grad_w[l].data[i * nin];
                        const double* wrow = &w.data[i * nin];
                        for (std::size_t j = 0; j < nin; ++j) gw[j] += g * src[j];
                        grad_b[l][i] += g;
                        if (dprev)
                            for (std::size_t j = 0; j < nin; ++j) dprev[j] += g * wrow[j];
                    }
                }
                if (l > 0) {
                    double* d = delta[l].data();
                    const double* a = act[l].data();
                    for (std::size_t t = 0; t < bsz * nin; ++t)
                        d[t] *= detail::activate_grad_from_output(a[t], f.activation);
                }
            }

            // momentum update
            for (std::size_t l = 0; l < n_layers; ++l) {
                double* w = f.layers[l].weights.data.data();
                double* v = vel_w[l].data.data();
                const double* g = grad_w[l].data.data();
                for (std::size_t t = 0; t < grad_w[l].data.size(); ++t) {
                    v[t] = kMomentum * v[t] - cfg.learning_rate * g[t];
                    w[t] += v[t];
                }
                double* b = f.layers[l].bias.data();
                double* vb = vel_b[l].data();
                const double* gb = grad_b[l].data();
                for (std::size_t t = 0; t < grad_b[l].size(); ++t) {
                    vb[t] = kMomentum * vb[t] - cfg.learning_rate * gb[t];
                    b[t] += vb[t];
                }
            }
        }
        if (on_epoch) on_epoch(epoch, loss_sum / static_cast<double>(full.size()));
    }
    return f;
}

struct EvalStats {
    double accuracy = 0.0;
    double mean_confidence_correct = 0.0;  // average confidence over correct predictions
    std::size_t count = 0;
};

inline EvalStats evaluate(const Network& f, const LabeledDataset& data) {
    EvalStats s;
    s.count = data.size();
    std::size_t correct = 0;
    double conf_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Prediction p = predict(f, data.images[i]);
        if (p.cls == data.labels[i]) {
            ++correct;
            conf_sum += p.confidence;
        }
    }
    s.accuracy = data.size() ? static_cast<double>(correct) / data.size() : 0.0;
    s.mean_confidence_correct = correct ? conf_sum / correct : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Model container: magic "NSPEC", version u32, activation u8, layer count
// u32, then per layer rows u32, cols u32, row-major f64 weights, f64 biases.
// All integers and doubles little-endian. Round-trips bit-exactly.

namespace detail {

constexpr char kModelMagic[5] = {'N', 'S', 'P', 'E', 'C'};
constexpr std::uint32_t kModelVersion = 1;

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
    out.write(b, 4);
}

inline void put_f64_le(std::ostream& out, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    const char b[8] = {char(v),       char(v >> 8),  char(v >> 16), char(v >> 24),
                       char(v >> 32), char(v >> 40), char(v >> 48), char(v >> 56)};
    out.write(b, 8);
}

inline std::uint32_t get_u32_le(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error(std::string("model: truncated file reading ") + what);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline double get_f64_le(std::istream& in, const char* what) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error(std::string("model: truncated file reading ") + what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return std::bit_cast<double>(v);
}

}  // namespace detail

inline void save_network(const Network& f, const std::string& path) {
    validate_network(f);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write(detail::kModelMagic, sizeof(detail::kModelMagic));
    detail::put_u32_le(out, detail::kModelVersion);
    out.put(static_cast<char>(f.activation));
    detail::put_u32_le(out, static_cast<std::uint32_t>(f.layers.size()));
    for (const Layer& layer : f.layers) {
        detail::put_u32_le(out, static_cast<std::uint32_t>(layer.weights.rows));
        detail::put_u32_le(out, static_cast<std::uint32_t>(layer.weights.cols));
        for (double w : layer.weights.data) detail::put_f64_le(out, w);
        for (double b : layer.bias) detail::put_f64_le(out, b);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, detail::kModelMagic, 5) != 0)
        throw std::runtime_error("model: bad magic (not a model file): " + path);
    const std::uint32_t version = detail::get_u32_le(in, "version");
    if (version != detail::kModelVersion) {
        std::ostringstream msg;
        msg << "model: unsupported format version " << version << " (expected "
            << detail::kModelVersion << "): " << path;
        throw std::runtime_error(msg.str());
    }
    const int act_tag = in.get();
    if (act_tag != 0 && act_tag != 1)
        throw std::runtime_error("model: unknown activation tag: " + path);
    const std::uint32_t n_layers = detail::get_u32_le(in, "layer count");
    if (n_layers < 2) throw std::runtime_error("model: needs at least two layers: " + path);

    Network f;
    f.activation = static_cast<Activation>(act_tag);
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const std::uint32_t rows = detail::get_u32_le(in, "layer rows");
        const std::uint32_t cols = detail::get_u32_le(in, "layer cols");
        if (rows == 0 || cols == 0) throw std::runtime_error("model: zero layer dimension");
        if (l == 0) {
            f.widths.push_back(cols);
        } else if (cols != f.widths.back()) {
            std::ostringstream msg;
            msg << "model: declared widths do not match matrix shapes at layer " << l
                << " (expected cols " << f.widths.back() << ", got " << cols << "): " << path;
            throw std::runtime_error(msg.str());
        }
        Layer layer;
        layer.weights = Matrix(rows, cols);
        for (double& w : layer.weights.data) w = detail::get_f64_le(in, "weights");
        layer.bias.resize(rows);
        for (double& b : layer.bias) b = detail::get_f64_le(in, "biases");
        if (!all_finite(layer.weights) || !all_finite(layer.bias))
            throw std::runtime_error("model: non-finite parameters: " + path);
        f.widths.push_back(rows);
        f.layers.push_back(std::move(layer));
    }
    validate_network(f);
    return f;
}

}  // namespace nullnet
