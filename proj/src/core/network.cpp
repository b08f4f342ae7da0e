#include "core/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace nnas {

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activate(double z, Activation act) {
    return act == Activation::Softplus ? softplus(z) : z;
}

double activate_derivative(double z, Activation act) {
    return act == Activation::Softplus ? sigmoid(z) : 1.0;
}

} // namespace

DenseNetwork::DenseNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), ErrorKind::InvalidArgument, "network: needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        require(layer.weights.rows() == layer.biases.size(), ErrorKind::DimensionMismatch,
                "network: bias length does not match layer " + std::to_string(l) + " output");
        require(all_finite(layer.weights) && all_finite(layer.biases), ErrorKind::InvalidArgument,
                "network: non-finite parameters in layer " + std::to_string(l));
        if (l > 0) {
            require(layer.weights.cols() == layers_[l - 1].weights.rows(),
                    ErrorKind::DimensionMismatch,
                    "network: layer " + std::to_string(l) + " input does not chain");
        }
    }
    require(layers_.back().activation == Activation::Identity, ErrorKind::InvalidArgument,
            "network: final layer must be identity (logits)");
    input_dim_ = layers_.front().weights.cols();
    output_dim_ = layers_.back().weights.rows();
}

Vec DenseNetwork::forward(const Vec& x) const {
    require(x.size() == input_dim_, ErrorKind::DimensionMismatch,
            "forward: input length does not match network input dimension");
    Vec a = x;
    for (const Layer& layer : layers_) {
        Vec z = matvec(layer.weights, a);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = activate(z[i] + layer.biases[i], layer.activation);
        }
        a = std::move(z);
    }
    return a;
}

Vec softmax(const Vec& logits) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - zmax);
        total += p[i];
    }
    for (double& v : p) {
        v /= total;
    }
    return p;
}

double DenseNetwork::qoi(const Vec& x, const QoISpec& spec) const {
    require(spec.class_index < output_dim_, ErrorKind::InvalidArgument,
            "qoi: class index out of range");
    const Vec logits = forward(x);
    if (spec.kind == ScoreKind::Logit) {
        return logits[spec.class_index];
    }
    return softmax(logits)[spec.class_index];
}

std::pair<double, Vec> DenseNetwork::qoi_with_gradient(const Vec& x, const QoISpec& spec) const {
    require(spec.class_index < output_dim_, ErrorKind::InvalidArgument,
            "qoi: class index out of range");
    require(x.size() == input_dim_, ErrorKind::DimensionMismatch,
            "grad_qoi: input length does not match network input dimension");

    const std::size_t L = layers_.size();
    std::vector<Vec> pre_act(L); // z = W a + b per layer
    Vec a = x;
    for (std::size_t l = 0; l < L; ++l) {
        Vec z = matvec(layers_[l].weights, a);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += layers_[l].biases[i];
        }
        pre_act[l] = z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = activate(z[i], layers_[l].activation);
        }
        a = std::move(z);
    }

    // Seed dQoI/dlogits. For the softmax probability of class k the Jacobian
    // row is p_k (e_k - p).
    Vec delta(output_dim_, 0.0);
    double value = 0.0;
    if (spec.kind == ScoreKind::Logit) {
        value = a[spec.class_index];
        delta[spec.class_index] = 1.0;
    } else {
        const Vec p = softmax(a);
        const double pk = p[spec.class_index];
        value = pk;
        for (std::size_t j = 0; j < output_dim_; ++j) {
            delta[j] = pk * ((j == spec.class_index ? 1.0 : 0.0) - p[j]);
        }
    }

    for (std::size_t l = L; l-- > 0;) {
        // Final layer is identity; hidden layers multiply by softplus'.
        if (layers_[l].activation == Activation::Softplus) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                delta[i] *= activate_derivative(pre_act[l][i], Activation::Softplus);
            }
        }
        delta = matvec_transposed(layers_[l].weights, delta);
    }
    return {value, std::move(delta)};
}

Vec DenseNetwork::grad_qoi(const Vec& x, const QoISpec& spec) const {
    return qoi_with_gradient(x, spec).second;
}

std::size_t DenseNetwork::predict(const Vec& x) const {
    const Vec logits = forward(x);
    return static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void validate(const Dataset& data) {
    require(!data.inputs.empty(), ErrorKind::InvalidArgument, "dataset: empty");
    require(data.inputs.size() == data.labels.size(), ErrorKind::InvalidArgument,
            "dataset: input and label counts differ");
    require(data.feature_lo < data.feature_hi, ErrorKind::InvalidArgument,
            "dataset: feature range is empty");
    require(data.num_classes >= 1, ErrorKind::InvalidArgument, "dataset: no classes");
    const std::size_t d = data.inputs.front().size();
    for (const Vec& x : data.inputs) {
        require(x.size() == d, ErrorKind::InvalidArgument, "dataset: ragged input lengths");
    }
    for (std::size_t label : data.labels) {
        require(label < data.num_classes, ErrorKind::InvalidArgument,
                "dataset: label out of range");
    }
}

namespace {

std::vector<Layer> initial_layers(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                  std::size_t num_classes, RandomSource& rng) {
    std::vector<std::size_t> sizes;
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(num_classes);

    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t fan_in = sizes[l];
        const std::size_t fan_out = sizes[l + 1];
        Layer layer;
        layer.weights = Mat(fan_out, fan_in);
        layer.biases = Vec(fan_out, 0.0);
        layer.activation =
            (l + 2 == sizes.size()) ? Activation::Identity : Activation::Softplus;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : layer.weights.data()) {
            w = (2.0 * rng.uniform() - 1.0) * limit;
        }
        layers.push_back(std::move(layer));
    }
    return layers;
}

} // namespace

TrainResult train_sgd(const Dataset& data, const TrainConfig& cfg) {
    validate(data);
    require(cfg.batch_size >= 1, ErrorKind::InvalidArgument, "train: batch size must be >= 1");
    require(cfg.learning_rate > 0.0, ErrorKind::InvalidArgument,
            "train: learning rate must be positive");

    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    RandomSource rng(cfg.seed);
    std::vector<Layer> layers = initial_layers(d, cfg.hidden_sizes, data.num_classes, rng);
    const std::size_t L = layers.size();

    // SGD runs on standardized features so the step size is scale-free; the
    // affine map is folded back into the first layer afterwards, so the
    // returned network consumes raw inputs.
    Vec mu(d, 0.0);
    Vec sd(d, 0.0);
    for (const Vec& x : data.inputs) {
        for (std::size_t j = 0; j < d; ++j) {
            mu[j] += x[j];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        mu[j] /= static_cast<double>(n);
    }
    for (const Vec& x : data.inputs) {
        for (std::size_t j = 0; j < d; ++j) {
            sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]);
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] <= 1e-12) {
            sd[j] = 1.0; // constant feature
        }
    }
    std::vector<Vec> standardized(n, Vec(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            standardized[i][j] = (data.inputs[i][j] - mu[j]) / sd[j];
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    double epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i-- > 1;) {
            std::swap(order[i], order[rng.below(i + 1)]);
        }
        epoch_loss = 0.0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t batch = std::min(cfg.batch_size, n - start);
            std::vector<Mat> grad_w(L);
            std::vector<Vec> grad_b(L);
            for (std::size_t l = 0; l < L; ++l) {
                grad_w[l] = Mat(layers[l].weights.rows(), layers[l].weights.cols());
                grad_b[l] = Vec(layers[l].biases.size(), 0.0);
            }

            for (std::size_t bi = 0; bi < batch; ++bi) {
                const std::size_t idx = order[start + bi];
                const Vec& x = standardized[idx];
                const std::size_t label = data.labels[idx];

                std::vector<Vec> inputs(L);
                std::vector<Vec> pre_act(L);
                Vec a = x;
                for (std::size_t l = 0; l < L; ++l) {
                    inputs[l] = a;
                    Vec z = matvec(layers[l].weights, a);
                    for (std::size_t j = 0; j < z.size(); ++j) {
                        z[j] += layers[l].biases[j];
                    }
                    pre_act[l] = z;
                    for (std::size_t j = 0; j < z.size(); ++j) {
                        z[j] = activate(z[j], layers[l].activation);
                    }
                    a = std::move(z);
                }

                const Vec p = softmax(a);
                epoch_loss += -std::log(std::max(p[label], 1e-300));

                Vec delta = p;
                delta[label] -= 1.0; // d(cross entropy)/d(logits)
                for (std::size_t l = L; l-- > 0;) {
                    if (layers[l].activation == Activation::Softplus) {
                        for (std::size_t j = 0; j < delta.size(); ++j) {
                            delta[j] *= sigmoid(pre_act[l][j]);
                        }
                    }
                    const Vec& layer_in = inputs[l];
                    for (std::size_t r = 0; r < delta.size(); ++r) {
                        double* grow = grad_w[l].row(r);
                        const double dr = delta[r];
                        for (std::size_t cidx = 0; cidx < layer_in.size(); ++cidx) {
                            grow[cidx] += dr * layer_in[cidx];
                        }
                        grad_b[l][r] += dr;
                    }
                    if (l > 0) {
                        delta = matvec_transposed(layers[l].weights, delta);
                    }
                }
            }

            const double step = cfg.learning_rate / static_cast<double>(batch);
            for (std::size_t l = 0; l < L; ++l) {
                double* w = layers[l].weights.data().data();
                const double* gw = grad_w[l].data().data();
                for (std::size_t j = 0; j < layers[l].weights.data().size(); ++j) {
                    w[j] -= step * gw[j];
                }
                for (std::size_t j = 0; j < layers[l].biases.size(); ++j) {
                    layers[l].biases[j] -= step * grad_b[l][j];
                }
            }
        }

        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss)) {
            throw Error(ErrorKind::Numeric,
                        "train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
        }
    }

    // Fold the standardization into the first layer:
    // W (x - mu) / sd + b  ==  (W / sd) x + (b - (W / sd) mu).
    Layer& first = layers.front();
    for (std::size_t r = 0; r < first.weights.rows(); ++r) {
        double* row = first.weights.row(r);
        double shift = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            row[j] /= sd[j];
            shift += row[j] * mu[j];
        }
        first.biases[r] -= shift;
    }

    TrainResult result{DenseNetwork(std::move(layers)), 0.0, epoch_loss};
    result.train_accuracy = accuracy(result.network, data);
    return result;
}

double accuracy(const DenseNetwork& net, const Dataset& data) {
    validate(data);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (net.predict(data.inputs[i]) == data.labels[i]) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kWeightMagic[8] = {'N', 'N', 'A', 'S', '0', '0', '0', '1'};

void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64_le(std::ostream& os, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

bool read_u32_le(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        return false;
    }
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

bool read_f64_le(std::istream& is, double& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        return false;
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    std::memcpy(&v, &bits, sizeof(v));
    return true;
}

bool read_u32_be(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        return false;
    }
    v = (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
        (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
    return true;
}

} // namespace

void save_weights(const DenseNetwork& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(os.good(), ErrorKind::Io, "save_weights: cannot open '" + path + "' for writing");
    os.write(kWeightMagic, sizeof(kWeightMagic));
    write_u32_le(os, static_cast<std::uint32_t>(net.layers().size()));
    for (const Layer& layer : net.layers()) {
        write_u32_le(os, static_cast<std::uint32_t>(layer.weights.rows()));
        write_u32_le(os, static_cast<std::uint32_t>(layer.weights.cols()));
        const unsigned char code = static_cast<unsigned char>(layer.activation);
        os.write(reinterpret_cast<const char*>(&code), 1);
        for (double w : layer.weights.data()) {
            write_f64_le(os, w);
        }
        for (double b : layer.biases) {
            write_f64_le(os, b);
        }
    }
    os.flush();
    require(os.good(), ErrorKind::Io, "save_weights: write to '" + path + "' failed");
}

DenseNetwork load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), ErrorKind::Io, "load_weights: cannot open '" + path + "'");

    char magic[8];
    require(static_cast<bool>(is.read(magic, sizeof(magic))), ErrorKind::Format,
            "load_weights: file too short for header");
    require(std::memcmp(magic, kWeightMagic, sizeof(magic)) == 0, ErrorKind::Format,
            "load_weights: bad magic bytes (not a weight file)");

    std::uint32_t layer_count = 0;
    require(read_u32_le(is, layer_count), ErrorKind::Format,
            "load_weights: truncated before layer count");
    require(layer_count >= 1 && layer_count <= 1024, ErrorKind::Format,
            "load_weights: implausible layer count");

    std::vector<Layer> layers;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const std::string where = "layer " + std::to_string(l);
        std::uint32_t out = 0;
        std::uint32_t in = 0;
        unsigned char code = 0;
        require(read_u32_le(is, out) && read_u32_le(is, in), ErrorKind::Format,
                "load_weights: truncated in header of " + where);
        require(static_cast<bool>(is.read(reinterpret_cast<char*>(&code), 1)),
                ErrorKind::Format, "load_weights: truncated in header of " + where);
        require(code <= 1, ErrorKind::Format,
                "load_weights: unknown activation code in " + where);
        require(out >= 1 && in >= 1, ErrorKind::Format,
                "load_weights: zero-sized " + where);

        Layer layer;
        layer.weights = Mat(out, in);
        layer.biases = Vec(out, 0.0);
        layer.activation = static_cast<Activation>(code);
        for (double& w : layer.weights.data()) {
            require(read_f64_le(is, w), ErrorKind::Format,
                    "load_weights: truncated in weights of " + where);
        }
        for (double& b : layer.biases) {
            require(read_f64_le(is, b), ErrorKind::Format,
                    "load_weights: truncated in biases of " + where);
        }
        layers.push_back(std::move(layer));
    }
    try {
        return DenseNetwork(std::move(layers));
    } catch (const Error& e) {
        throw Error(ErrorKind::Format, std::string("load_weights: ") + e.what());
    }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    require(imgs.good(), ErrorKind::Io, "load_idx: cannot open '" + images_path + "'");
    std::ifstream labs(labels_path, std::ios::binary);
    require(labs.good(), ErrorKind::Io, "load_idx: cannot open '" + labels_path + "'");

    std::uint32_t magic = 0;
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    require(read_u32_be(imgs, magic), ErrorKind::Format, "load_idx: image file too short");
    require(magic == 0x00000803u, ErrorKind::Format,
            "load_idx: bad image magic (expected 0x00000803)");
    require(read_u32_be(imgs, count) && read_u32_be(imgs, rows) && read_u32_be(imgs, cols),
            ErrorKind::Format, "load_idx: truncated image header");
    require(count >= 1 && rows >= 1 && cols >= 1, ErrorKind::Format,
            "load_idx: empty image file");

    std::uint32_t lab_magic = 0;
    std::uint32_t lab_count = 0;
    require(read_u32_be(labs, lab_magic), ErrorKind::Format, "load_idx: label file too short");
    require(lab_magic == 0x00000801u, ErrorKind::Format,
            "load_idx: bad label magic (expected 0x00000801)");
    require(read_u32_be(labs, lab_count), ErrorKind::Format, "load_idx: truncated label header");
    require(lab_count == count, ErrorKind::Format,
            "load_idx: image count " + std::to_string(count) + " does not match label count " +
                std::to_string(lab_count));

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    Dataset data;
    data.feature_lo = 0.0;
    data.feature_hi = 255.0;
    data.inputs.reserve(count);
    data.labels.reserve(count);

    std::vector<unsigned char> buf(pixels);
    std::size_t max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        require(static_cast<bool>(imgs.read(reinterpret_cast<char*>(buf.data()),
                                            static_cast<std::streamsize>(pixels))),
                ErrorKind::Format, "load_idx: truncated image data at image " + std::to_string(i));
        Vec x(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            x[p] = static_cast<double>(buf[p]);
        }
        data.inputs.push_back(std::move(x));

        unsigned char label = 0;
        require(static_cast<bool>(labs.read(reinterpret_cast<char*>(&label), 1)),
                ErrorKind::Format, "load_idx: truncated label data at index " + std::to_string(i));
        data.labels.push_back(label);
        max_label = std::max<std::size_t>(max_label, label);
    }
    data.num_classes = max_label + 1;
    return data;
}

Dataset make_blobs(std::size_t dim, std::size_t classes, std::size_t per_class,
                   double lo, double hi, std::uint64_t seed, std::uint64_t sample_seed) {
    require(dim >= 1 && classes >= 2 && per_class >= 1, ErrorKind::InvalidArgument,
            "make_blobs: need dim >= 1, classes >= 2, per_class >= 1");
    require(lo < hi, ErrorKind::InvalidArgument, "make_blobs: empty feature range");

    RandomSource center_rng = RandomSource(seed).derive(0xB10B);
    RandomSource rng = RandomSource(sample_seed).derive(0x5A3);
    const double range = hi - lo;
    const double spread = 0.08 * range;

    std::vector<Vec> centers(classes, Vec(dim, 0.0));
    for (Vec& center : centers) {
        for (double& c : center) {
            // Keep centers in the middle half so sigma-noise rarely clips.
            c = lo + range * (0.25 + 0.5 * center_rng.uniform());
        }
    }

    Dataset data;
    data.feature_lo = lo;
    data.feature_hi = hi;
    data.num_classes = classes;
    for (std::size_t cls = 0; cls < classes; ++cls) {
        for (std::size_t s = 0; s < per_class; ++s) {
            Vec x(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                x[j] = std::clamp(centers[cls][j] + spread * rng.gaussian(), lo, hi);
            }
            data.inputs.push_back(std::move(x));
            data.labels.push_back(cls);
        }
    }
    for (std::size_t i = data.size(); i-- > 1;) {
        const std::size_t j = rng.below(i + 1);
        std::swap(data.inputs[i], data.inputs[j]);
        std::swap(data.labels[i], data.labels[j]);
    }
    return data;
}

Dataset make_blobs(std::size_t dim, std::size_t classes, std::size_t per_class,
                   double lo, double hi, std::uint64_t seed) {
    return make_blobs(dim, classes, per_class, lo, hi, seed, seed);
}

} // namespace nnas
