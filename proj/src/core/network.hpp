#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/linalg.hpp"
#include "core/random.hpp"

namespace nnas {

enum class Activation : std::uint8_t {
    Identity = 0,
    Softplus = 1,
};

struct Layer {
    Mat weights; // out x in
    Vec biases;  // out
    Activation activation = Activation::Softplus;
};

enum class ScoreKind {
    SoftmaxProbability,
    Logit,
};

struct QoISpec {
    std::size_t class_index = 0;
    ScoreKind kind = ScoreKind::SoftmaxProbability;
};

// Fully-connected feed-forward network. Hidden layers use softplus so the
// output stays differentiable everywhere; the final layer is identity and
// produces logits. Immutable once constructed.
class DenseNetwork {
public:
    explicit DenseNetwork(std::vector<Layer> layers);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    Vec forward(const Vec& x) const;

    // Scalar quantity of interest: softmax probability or raw logit of
    // spec.class_index.
    double qoi(const Vec& x, const QoISpec& spec) const;

    // Gradient of the QoI with respect to the input, by reverse-mode
    // differentiation through the softplus layers (and the softmax when
    // that score kind is selected).
    Vec grad_qoi(const Vec& x, const QoISpec& spec) const;

    // One forward plus one backward sweep; cheaper than calling qoi and
    // grad_qoi separately.
    std::pair<double, Vec> qoi_with_gradient(const Vec& x, const QoISpec& spec) const;

    std::size_t predict(const Vec& x) const;

private:
    std::vector<Layer> layers_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
};

Vec softmax(const Vec& logits);

// softplus(z) = max(z, 0) + log(1 + exp(-|z|)), overflow-safe.
double softplus(double z);

struct Dataset {
    std::vector<Vec> inputs;
    std::vector<std::size_t> labels;
    double feature_lo = 0.0;
    double feature_hi = 255.0;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return inputs.size(); }
    std::size_t dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

void validate(const Dataset& data);

struct TrainConfig {
    std::vector<std::size_t> hidden_sizes;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::uint64_t seed = 1;
};

struct TrainResult {
    DenseNetwork network;
    double train_accuracy = 0.0;
    double final_loss = 0.0;
};

// Cross-entropy mini-batch SGD, deterministic for a fixed seed. Weights are
// initialized uniformly in +/- sqrt(6 / (fan_in + fan_out)). Divergence
// (non-finite loss) raises ErrorKind::Numeric with the epoch index.
TrainResult train_sgd(const Dataset& data, const TrainConfig& cfg);

double accuracy(const DenseNetwork& net, const Dataset& data);

// Weight file: magic "NNAS0001", little-endian u32 layer count, then per
// layer u32 out, u32 in, u8 activation code, out*in f64 weights row-major,
// out f64 biases. Round trips bit-exactly.
void save_weights(const DenseNetwork& net, const std::string& path);
DenseNetwork load_weights(const std::string& path);

// Standard IDX ingestion (big-endian magic 0x00000803 / 0x00000801): pixel
// bytes widen to doubles in [0, 255], images flatten row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Seeded synthetic classification set: isotropic Gaussian blobs with one
// center per class, samples clipped to [lo, hi]. The class centers depend
// only on seed; sample_seed draws the points, so train/test splits share
// the same blobs by reusing seed with a fresh sample_seed.
Dataset make_blobs(std::size_t dim, std::size_t classes, std::size_t per_class,
                   double lo, double hi, std::uint64_t seed, std::uint64_t sample_seed);
Dataset make_blobs(std::size_t dim, std::size_t classes, std::size_t per_class,
                   double lo, double hi, std::uint64_t seed);

} // namespace nnas
