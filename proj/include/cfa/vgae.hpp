#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfa/graph.hpp"
#include "cfa/linalg.hpp"

namespace cfa {

inline constexpr std::size_t kHidden1 = 32;
inline constexpr std::size_t kHidden2 = 64;
inline constexpr std::size_t kHidden3 = 48;
inline constexpr std::size_t kLatentDim = 24;

enum class Activation { relu, none };

// One graph convolution: H_out = act(A_hat * H_in * W + b).
struct GcnLayer {
    Matrix w;  // in x out
    std::vector<double> b;
    Activation act = Activation::relu;

    std::size_t in_dim() const { return w.rows; }
    std::size_t out_dim() const { return w.cols; }
};

// Encoder chain F -> 32 -> 64 -> 48 with relu, dropout after the first two
// activations, then two parallel heads 48 -> 24 for the posterior mean and
// log-variance. Decoder is the inner product sigma(z_u . z_v).
struct VgaeModel {
    std::size_t feature_dim = kBaseFeatureCount;
    GcnLayer enc1, enc2, enc3, mu_head, logvar_head;
    double dropout_p = 0.3;
    std::uint64_t seed = 0;
    std::uint64_t history_digest = 0;

    std::array<GcnLayer*, 5> layers() {
        return {&enc1, &enc2, &enc3, &mu_head, &logvar_head};
    }
    std::array<const GcnLayer*, 5> layers() const {
        return {&enc1, &enc2, &enc3, &mu_head, &logvar_head};
    }
};

// Glorot-uniform weights, zero biases.
VgaeModel init_model(std::size_t feature_dim, std::uint64_t seed);

std::size_t parameter_count(const VgaeModel& model);
std::size_t parameter_count_for(std::size_t feature_dim);

// Hex digest over dims and parameters; profiles pin it to detect mismatched
// or edited models.
std::string model_digest(const VgaeModel& model);

// A_hat = D^(-1/2) (A_sym + I) D^(-1/2) over the symmetrized, deduplicated
// edge set. Rows with only the identity entry get value 1.
SparseMatrix normalize_adjacency(const std::vector<std::uint32_t>& src,
                                 const std::vector<std::uint32_t>& dst,
                                 std::size_t n);

enum class EncodeMode { train, infer };

struct LatentSample {
    Matrix mu;      // n x L
    Matrix logvar;  // n x L
    Matrix z;       // n x L; equals mu in infer mode
    Matrix eps;     // reparameterization noise (train mode only)
};

LatentSample encode(const VgaeModel& model, const ExecutionGraph& graph,
                    EncodeMode mode, std::uint64_t seed = 0);

struct EdgeList {
    std::vector<std::uint32_t> src;
    std::vector<std::uint32_t> dst;

    std::size_t size() const { return src.size(); }
};

struct LossParts {
    double loss = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

// Mean binary cross-entropy of sigma(z_u . z_v) over positive and negative
// pairs plus the per-node mean KL to the standard normal prior.
LossParts decode_loss(const LatentSample& sample, const EdgeList& pos_edges,
                      const EdgeList& neg_edges);

struct ModelGrads {
    std::array<Matrix, 5> w;
    std::array<std::vector<double>, 5> b;
};

// One train-mode forward and loss evaluation. Dropout masks, the
// reparameterization noise and therefore the value are a pure function of
// (model, graph, edges, noise_seed); when `grads` is non-null the analytic
// parameter gradients are filled in, which is what finite-difference checks
// diff against.
LossParts training_loss(const VgaeModel& model, const ExecutionGraph& graph,
                        const EdgeList& pos_edges, const EdgeList& neg_edges,
                        std::uint64_t noise_seed, ModelGrads* grads = nullptr);

struct TrainConfig {
    std::size_t max_epochs = 3000;
    std::size_t patience = 500;
    double lr0 = 0.01;
    double lr_decay_factor = 3.0;
    std::size_t lr_decay_every = 150;
    std::size_t lr_fixed_after = 750;
    std::uint64_t seed = 0;
    double negative_sampling_ratio = 1.0;

    void validate() const;
};

// lr0 / factor^k with k = min(epoch / every, fixed_after / every).
double scheduled_lr(const TrainConfig& cfg, std::size_t epoch);

// Stops once `patience` consecutive epochs fail to improve the monitor.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

    // Returns true when training should stop after this epoch.
    bool update(double monitor, std::size_t epoch) {
        if (monitor > best_) {
            best_ = monitor;
            best_epoch_ = epoch;
            since_ = 0;
            return false;
        }
        return ++since_ >= patience_;
    }

    double best() const { return best_; }
    std::size_t best_epoch() const { return best_epoch_; }

private:
    std::size_t patience_;
    double best_ = -1.0;  // any real monitor improves on this
    std::size_t since_ = 0;
    std::size_t best_epoch_ = 0;
};

struct EpochStats {
    std::size_t epoch;
    double loss;
    double ap;
    double auc;
    double lr;
};

struct TrainResult {
    VgaeModel model;  // best-monitor snapshot
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
    double best_monitor = 0.0;
    std::size_t stopped_epoch = 0;
};

TrainResult train(const ExecutionGraph& graph, const TrainConfig& cfg);

// Uniform non-edges: disjoint from the directed edge set, its reverse, and
// the diagonal (the decoder is symmetric, so those would be contradictory
// or degenerate targets).
EdgeList sample_negative_edges(std::size_t n, std::size_t count,
                               const EdgeList& edges, class Rng& rng);

std::string model_to_json(const VgaeModel& model);
VgaeModel model_from_json(const std::string& json_text);
void save_model(const VgaeModel& model, const std::filesystem::path& path);
VgaeModel load_model(const std::filesystem::path& path);

}  // namespace cfa
