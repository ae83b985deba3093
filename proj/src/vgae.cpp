#include "cfa/vgae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cfa/digest.hpp"
#include "cfa/errors.hpp"
#include "cfa/metrics.hpp"
#include "cfa/optim.hpp"
#include "cfa/rng.hpp"
#include "json.hpp"

namespace cfa {

namespace {

constexpr double kProbEps = 1e-7;

GcnLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    GcnLayer layer;
    layer.w = Matrix(in, out);
    double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& v : layer.w.data) v = (2.0 * rng.uniform_real() - 1.0) * limit;
    layer.b.assign(out, 0.0);
    layer.act = act;
    return layer;
}

void add_bias_rows(Matrix& m, const std::vector<double>& b) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += b[j];
    }
}

Matrix relu(const Matrix& q) {
    Matrix h = q;
    for (double& v : h.data) v = v > 0.0 ? v : 0.0;
    return h;
}

void relu_backward_inplace(Matrix& grad, const Matrix& q) {
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (q.data[i] <= 0.0) grad.data[i] = 0.0;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j];
    }
    return out;
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

// Everything the backward pass needs from one encoder evaluation.
struct ForwardPass {
    Matrix p1, q1, d1;
    Matrix p2, q2, d2;
    Matrix p3, q3, h3;
    Matrix p4;
    LatentSample sample;
    std::vector<std::uint8_t> mask1, mask2;
    bool train_mode = false;
    double keep = 1.0;
};

// The stored count-type features are counts over trace_len, which leaves
// them orders of magnitude below the step-index features and starves the
// first convolution. The encoder rescales them onto a log hotness axis,
// ln(1 + count) / ln(1 + trace_len); the transform is a fixed per-element
// map (no cross-node statistics), so near-identical executions stay
// near-identical inputs. Step-index features are already O(1) and pass
// through.
Matrix rescale_count_features(const Matrix& x, std::size_t trace_len) {
    static constexpr bool kCountColumn[kBaseFeatureCount] = {
        true,  true,  false, false, true,  true,  true,  false,
        false, false, false, true,  true,  false, false,
    };
    Matrix out = x;
    const double len = static_cast<double>(trace_len);
    const double denom = std::log1p(len);
    for (std::size_t j = 0; j < std::min(x.cols, kBaseFeatureCount); ++j) {
        if (!kCountColumn[j]) continue;
        for (std::size_t i = 0; i < x.rows; ++i)
            out.at(i, j) = std::log1p(x.at(i, j) * len) / denom;
    }
    // Remove each column's common pedestal so the convolutions propagate
    // per-node deviations instead of a shared constant (the mean is an
    // average over all nodes, far more stable across executions than any
    // single node's features), then apply fixed per-column gains. Edge-count
    // columns are invariant across executions of one program and take the
    // largest gain; visit-count columns jitter a little and take a modest
    // one; step-index columns vary the most between runs and pass through.
    static constexpr double kDegreeGain = 8.0;
    static constexpr double kCountGain = 12.0;
    static constexpr bool kDegreeColumn[kBaseFeatureCount] = {
        true,  false, false, false, true,  true,  false, false,
        false, false, false, false, false, false, false,
    };
    for (std::size_t j = 0; j < std::min(x.cols, kBaseFeatureCount); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) mean += out.at(i, j);
        mean /= static_cast<double>(x.rows);
        double gain =
            kDegreeColumn[j] ? kDegreeGain : (kCountColumn[j] ? kCountGain : 1.0);
        for (std::size_t i = 0; i < x.rows; ++i)
            out.at(i, j) = (out.at(i, j) - mean) * gain;
    }
    return out;
}

ForwardPass forward(const VgaeModel& model, const SparseMatrix& a_hat,
                    const Matrix& raw_x, std::size_t trace_len,
                    EncodeMode mode, std::uint64_t seed) {
    if (raw_x.cols != model.feature_dim)
        throw ModelError("feature width " + std::to_string(raw_x.cols) +
                         " does not match model feature_dim " +
                         std::to_string(model.feature_dim));
    Matrix x = rescale_count_features(raw_x, trace_len);
    ForwardPass f;
    f.train_mode = mode == EncodeMode::train;
    f.keep = 1.0 - model.dropout_p;
    const std::size_t n = x.rows;

    Rng rng(seed);
    if (f.train_mode) {
        // Fixed draw order keeps the noise a pure function of the seed.
        f.mask1.resize(n * kHidden1);
        for (auto& m : f.mask1) m = rng.uniform_real() < f.keep;
        f.mask2.resize(n * kHidden2);
        for (auto& m : f.mask2) m = rng.uniform_real() < f.keep;
        f.sample.eps = Matrix(n, kLatentDim);
        for (double& e : f.sample.eps.data) e = rng.normal();
    }

    auto dropout = [&](const Matrix& h, const std::vector<std::uint8_t>& mask) {
        if (!f.train_mode) return h;
        Matrix d = h;
        for (std::size_t i = 0; i < d.data.size(); ++i)
            d.data[i] = mask[i] ? d.data[i] / f.keep : 0.0;
        return d;
    };

    f.p1 = spmm(a_hat, x);
    f.q1 = matmul(f.p1, model.enc1.w);
    add_bias_rows(f.q1, model.enc1.b);
    f.d1 = dropout(relu(f.q1), f.mask1);

    f.p2 = spmm(a_hat, f.d1);
    f.q2 = matmul(f.p2, model.enc2.w);
    add_bias_rows(f.q2, model.enc2.b);
    f.d2 = dropout(relu(f.q2), f.mask2);

    f.p3 = spmm(a_hat, f.d2);
    f.q3 = matmul(f.p3, model.enc3.w);
    add_bias_rows(f.q3, model.enc3.b);
    f.h3 = relu(f.q3);

    f.p4 = spmm(a_hat, f.h3);
    f.sample.mu = matmul(f.p4, model.mu_head.w);
    add_bias_rows(f.sample.mu, model.mu_head.b);
    f.sample.logvar = matmul(f.p4, model.logvar_head.w);
    add_bias_rows(f.sample.logvar, model.logvar_head.b);

    if (f.train_mode) {
        f.sample.z = f.sample.mu;
        for (std::size_t i = 0; i < f.sample.z.data.size(); ++i)
            f.sample.z.data[i] += std::exp(0.5 * f.sample.logvar.data[i]) *
                                  f.sample.eps.data[i];
    } else {
        f.sample.z = f.sample.mu;
    }
    return f;
}

struct DecodeGrad {
    LossParts parts;
    Matrix dmu;
    Matrix dlogvar;
};

// Loss and its gradient w.r.t. mu and logvar; the reparameterization path
// through z is folded in for train-mode samples.
DecodeGrad decode_loss_grad(const LatentSample& sample, const EdgeList& pos,
                            const EdgeList& neg, bool want_grad) {
    const Matrix& z = sample.z;
    const std::size_t n = z.rows;
    const std::size_t total = pos.size() + neg.size();
    if (total == 0) throw ModelError("decode_loss needs at least one edge");

    DecodeGrad out;
    Matrix dz;
    if (want_grad) dz = Matrix(n, z.cols);

    double bce = 0.0;
    auto accumulate = [&](std::uint32_t u, std::uint32_t v, double label) {
        const double* zu = z.row(u);
        const double* zv = z.row(v);
        double s = 0.0;
        for (std::size_t k = 0; k < z.cols; ++k) s += zu[k] * zv[k];
        double praw = sigmoid(s);
        double p = std::clamp(praw, kProbEps, 1.0 - kProbEps);
        bce -= label * std::log(p) + (1.0 - label) * std::log(1.0 - p);
        if (want_grad && praw == p) {
            double gs = (praw - label) / static_cast<double>(total);
            double* du = dz.row(u);
            double* dv = dz.row(v);
            for (std::size_t k = 0; k < z.cols; ++k) {
                du[k] += gs * zv[k];
                dv[k] += gs * zu[k];
            }
        }
    };
    for (std::size_t e = 0; e < pos.size(); ++e)
        accumulate(pos.src[e], pos.dst[e], 1.0);
    for (std::size_t e = 0; e < neg.size(); ++e)
        accumulate(neg.src[e], neg.dst[e], 0.0);
    out.parts.recon = bce / static_cast<double>(total);

    // KL to the standard-normal prior: the per-node mean of the dimension
    // sums, scaled by a further 1/n. With the per-node mean alone the prior
    // overpowers the sampled-edge reconstruction term at L=24 and the
    // posterior collapses before the encoder separates edges from
    // non-edges; the extra 1/n is the weighting graph-autoencoder training
    // loops conventionally use.
    double kl = 0.0;
    for (std::size_t i = 0; i < sample.mu.data.size(); ++i) {
        double mu = sample.mu.data[i];
        double lv = sample.logvar.data[i];
        kl += -0.5 * (1.0 + lv - mu * mu - std::exp(lv));
    }
    out.parts.kl = kl / (static_cast<double>(n) * static_cast<double>(n));
    out.parts.loss = out.parts.recon + out.parts.kl;

    if (want_grad) {
        const double inv_n =
            1.0 / (static_cast<double>(n) * static_cast<double>(n));
        out.dmu = Matrix(sample.mu.rows, sample.mu.cols);
        out.dlogvar = Matrix(sample.mu.rows, sample.mu.cols);
        const bool sampled = sample.eps.data.size() == sample.mu.data.size();
        for (std::size_t i = 0; i < sample.mu.data.size(); ++i) {
            double mu = sample.mu.data[i];
            double lv = sample.logvar.data[i];
            double g = dz.data[i];
            out.dmu.data[i] = g + inv_n * mu;
            double dlv = inv_n * 0.5 * (std::exp(lv) - 1.0);
            if (sampled)
                dlv += g * 0.5 * std::exp(0.5 * lv) * sample.eps.data[i];
            out.dlogvar.data[i] = dlv;
        }
    }
    return out;
}

ModelGrads backward(const VgaeModel& model, const SparseMatrix& a_hat,
                    const ForwardPass& f, const Matrix& dmu,
                    const Matrix& dlogvar) {
    ModelGrads g;

    // Heads share the propagated input p4.
    g.w[3] = matmul_ta(f.p4, dmu);
    g.b[3] = column_sums(dmu);
    g.w[4] = matmul_ta(f.p4, dlogvar);
    g.b[4] = column_sums(dlogvar);

    Matrix dp4 = matmul_tb(dmu, model.mu_head.w);
    {
        Matrix dp4_lv = matmul_tb(dlogvar, model.logvar_head.w);
        for (std::size_t i = 0; i < dp4.data.size(); ++i)
            dp4.data[i] += dp4_lv.data[i];
    }

    Matrix dh3 = spmm(a_hat, dp4);  // A_hat is symmetric
    relu_backward_inplace(dh3, f.q3);
    g.w[2] = matmul_ta(f.p3, dh3);
    g.b[2] = column_sums(dh3);

    Matrix dd2 = spmm(a_hat, matmul_tb(dh3, model.enc3.w));
    if (f.train_mode)
        for (std::size_t i = 0; i < dd2.data.size(); ++i)
            dd2.data[i] = f.mask2[i] ? dd2.data[i] / f.keep : 0.0;
    relu_backward_inplace(dd2, f.q2);
    g.w[1] = matmul_ta(f.p2, dd2);
    g.b[1] = column_sums(dd2);

    Matrix dd1 = spmm(a_hat, matmul_tb(dd2, model.enc2.w));
    if (f.train_mode)
        for (std::size_t i = 0; i < dd1.data.size(); ++i)
            dd1.data[i] = f.mask1[i] ? dd1.data[i] / f.keep : 0.0;
    relu_backward_inplace(dd1, f.q1);
    g.w[0] = matmul_ta(f.p1, dd1);
    g.b[0] = column_sums(dd1);

    return g;
}

EdgeList graph_edges(const ExecutionGraph& graph) {
    return EdgeList{graph.edges_src, graph.edges_dst};
}

}  // namespace

VgaeModel init_model(std::size_t feature_dim, std::uint64_t seed) {
    if (feature_dim == 0) throw ModelError("feature_dim must be positive");
    Rng rng(seed);
    VgaeModel m;
    m.feature_dim = feature_dim;
    m.seed = seed;
    m.enc1 = make_layer(feature_dim, kHidden1, Activation::relu, rng);
    m.enc2 = make_layer(kHidden1, kHidden2, Activation::relu, rng);
    m.enc3 = make_layer(kHidden2, kHidden3, Activation::relu, rng);
    m.mu_head = make_layer(kHidden3, kLatentDim, Activation::none, rng);
    m.logvar_head = make_layer(kHidden3, kLatentDim, Activation::none, rng);
    // Warm encoder, cool decoder: the gained convolutions counteract the
    // signal shrink across five relu propagations, while small head weights
    // keep the initial edge scores near sigma(0) instead of saturating the
    // sigmoid.
    for (GcnLayer* l : {&m.enc1, &m.enc2, &m.enc3})
        for (double& v : l->w.data) v *= 2.5;
    for (double& v : m.mu_head.w.data) v *= 0.1;
    for (double& v : m.logvar_head.w.data) v *= 0.1;
    return m;
}

std::size_t parameter_count(const VgaeModel& model) {
    std::size_t total = 0;
    for (const GcnLayer* l : model.layers())
        total += l->w.data.size() + l->b.size();
    return total;
}

std::size_t parameter_count_for(std::size_t feature_dim) {
    auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
    return dense(feature_dim, kHidden1) + dense(kHidden1, kHidden2) +
           dense(kHidden2, kHidden3) + 2 * dense(kHidden3, kLatentDim);
}

std::string model_digest(const VgaeModel& model) {
    Fnv1a h;
    h.update_u64(model.feature_dim);
    for (const GcnLayer* l : model.layers()) {
        h.update_u64(l->w.rows);
        h.update_u64(l->w.cols);
        for (double v : l->w.data) h.update_f64(v);
        for (double v : l->b) h.update_f64(v);
    }
    h.update_f64(model.dropout_p);
    return h.hex();
}

SparseMatrix normalize_adjacency(const std::vector<std::uint32_t>& src,
                                 const std::vector<std::uint32_t>& dst,
                                 std::size_t n) {
    // Symmetrized neighbor sets; the diagonal weight is 1 for the identity
    // plus 1 more if the graph itself has the self-loop.
    std::vector<std::vector<std::uint32_t>> neigh(n);
    std::vector<double> diag(n, 1.0);
    for (std::size_t e = 0; e < src.size(); ++e) {
        std::uint32_t u = src[e];
        std::uint32_t v = dst[e];
        if (u == v) {
            diag[u] = 2.0;
        } else {
            neigh[u].push_back(v);
            neigh[v].push_back(u);
        }
    }
    std::vector<double> degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& vec = neigh[i];
        std::sort(vec.begin(), vec.end());
        vec.erase(std::unique(vec.begin(), vec.end()), vec.end());
        degree[i] = diag[i] + static_cast<double>(vec.size());
    }

    SparseMatrix s;
    s.n = n;
    s.row_ptr.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        s.row_ptr[i + 1] = s.row_ptr[i] + neigh[i].size() + 1;
    s.col.resize(s.row_ptr[n]);
    s.val.resize(s.row_ptr[n]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t p = s.row_ptr[i];
        bool diag_done = false;
        auto emit = [&](std::size_t j, double w) {
            s.col[p] = j;
            s.val[p] = w / std::sqrt(degree[i] * degree[j]);
            ++p;
        };
        for (std::uint32_t j : neigh[i]) {
            if (!diag_done && j > i) {
                emit(i, diag[i]);
                diag_done = true;
            }
            emit(j, 1.0);
        }
        if (!diag_done) emit(i, diag[i]);
    }
    return s;
}

LatentSample encode(const VgaeModel& model, const ExecutionGraph& graph,
                    EncodeMode mode, std::uint64_t seed) {
    SparseMatrix a_hat =
        normalize_adjacency(graph.edges_src, graph.edges_dst, graph.node_count());
    ForwardPass f = forward(model, a_hat, graph.features, graph.trace_len, mode, seed);
    return std::move(f.sample);
}

LossParts decode_loss(const LatentSample& sample, const EdgeList& pos_edges,
                      const EdgeList& neg_edges) {
    return decode_loss_grad(sample, pos_edges, neg_edges, false).parts;
}

LossParts training_loss(const VgaeModel& model, const ExecutionGraph& graph,
                        const EdgeList& pos_edges, const EdgeList& neg_edges,
                        std::uint64_t noise_seed, ModelGrads* grads) {
    SparseMatrix a_hat =
        normalize_adjacency(graph.edges_src, graph.edges_dst, graph.node_count());
    ForwardPass f =
        forward(model, a_hat, graph.features, graph.trace_len, EncodeMode::train, noise_seed);
    DecodeGrad dg =
        decode_loss_grad(f.sample, pos_edges, neg_edges, grads != nullptr);
    if (grads) *grads = backward(model, a_hat, f, dg.dmu, dg.dlogvar);
    return dg.parts;
}

void TrainConfig::validate() const {
    if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
    if (patience == 0) throw ConfigError("patience must be positive");
    if (patience > max_epochs)
        throw ConfigError("patience must not exceed max_epochs");
    if (lr0 <= 0.0) throw ConfigError("lr0 must be positive");
    if (lr_decay_factor <= 0.0)
        throw ConfigError("lr_decay_factor must be positive");
    if (lr_decay_every == 0)
        throw ConfigError("lr_decay_every must be positive");
    if (negative_sampling_ratio <= 0.0)
        throw ConfigError("negative_sampling_ratio must be positive");
}

double scheduled_lr(const TrainConfig& cfg, std::size_t epoch) {
    std::size_t k =
        std::min(epoch / cfg.lr_decay_every, cfg.lr_fixed_after / cfg.lr_decay_every);
    double denom = 1.0;
    for (std::size_t i = 0; i < k; ++i) denom *= cfg.lr_decay_factor;
    return cfg.lr0 / denom;
}

EdgeList sample_negative_edges(std::size_t n, std::size_t count,
                               const EdgeList& edges, Rng& rng) {
    std::unordered_set<std::uint64_t> forbidden;
    forbidden.reserve(edges.size() * 2 + n);
    auto key = [](std::uint64_t u, std::uint64_t v) { return (u << 32) | v; };
    for (std::size_t e = 0; e < edges.size(); ++e) {
        forbidden.insert(key(edges.src[e], edges.dst[e]));
        forbidden.insert(key(edges.dst[e], edges.src[e]));
    }
    for (std::size_t i = 0; i < n; ++i) forbidden.insert(key(i, i));

    EdgeList out;
    out.src.reserve(count);
    out.dst.reserve(count);
    std::size_t attempts = 0;
    const std::size_t attempt_cap = 200 * count + 10000;
    while (out.size() < count) {
        if (++attempts > attempt_cap)
            throw ModelError("graph too dense to sample non-edges");
        auto u = static_cast<std::uint32_t>(rng.uniform_index(n));
        auto v = static_cast<std::uint32_t>(rng.uniform_index(n));
        if (forbidden.count(key(u, v))) continue;
        out.src.push_back(u);
        out.dst.push_back(v);
    }
    return out;
}

TrainResult train(const ExecutionGraph& graph, const TrainConfig& cfg) {
    cfg.validate();
    if (graph.node_count() == 0) throw ModelError("cannot train on empty graph");

    const EdgeList pos = graph_edges(graph);
    if (pos.size() == 0)
        throw ModelError("cannot train on a graph without edges");
    const std::size_t n = graph.node_count();
    const SparseMatrix a_hat =
        normalize_adjacency(graph.edges_src, graph.edges_dst, n);

    VgaeModel model = init_model(graph.features.cols, mix_seed(cfg.seed, 0));
    const auto neg_count = static_cast<std::size_t>(std::llround(
        static_cast<double>(pos.size()) * cfg.negative_sampling_ratio));

    Rng eval_rng(mix_seed(cfg.seed, 2));
    const EdgeList eval_neg =
        sample_negative_edges(n, pos.size(), pos, eval_rng);

    Rng train_rng(mix_seed(cfg.seed, 1));

    std::array<AdamSlot, 5> wslots{
        AdamSlot(model.enc1.w.data.size()), AdamSlot(model.enc2.w.data.size()),
        AdamSlot(model.enc3.w.data.size()),
        AdamSlot(model.mu_head.w.data.size()),
        AdamSlot(model.logvar_head.w.data.size())};
    std::array<AdamSlot, 5> bslots{
        AdamSlot(model.enc1.b.size()),    AdamSlot(model.enc2.b.size()),
        AdamSlot(model.enc3.b.size()),    AdamSlot(model.mu_head.b.size()),
        AdamSlot(model.logvar_head.b.size())};

    TrainResult result;
    EarlyStopper stopper(cfg.patience);
    VgaeModel best = model;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = scheduled_lr(cfg, epoch);
        const std::uint64_t noise_seed = train_rng.next_u64();
        EdgeList neg = sample_negative_edges(n, neg_count, pos, train_rng);

        ForwardPass f =
            forward(model, a_hat, graph.features, graph.trace_len, EncodeMode::train, noise_seed);
        DecodeGrad dg = decode_loss_grad(f.sample, pos, neg, true);
        if (!std::isfinite(dg.parts.loss))
            throw TrainingDivergedError("non-finite training loss", epoch);

        ModelGrads grads = backward(model, a_hat, f, dg.dmu, dg.dlogvar);
        auto layers = model.layers();
        for (std::size_t l = 0; l < 5; ++l) {
            adam_step(layers[l]->w.data, grads.w[l].data, wslots[l], epoch + 1,
                      lr);
            adam_step(layers[l]->b, grads.b[l], bslots[l], epoch + 1, lr);
        }

        // Monitor on the updated weights: deterministic infer-mode scores
        // against the full positive set and the fixed negative set.
        ForwardPass eval =
            forward(model, a_hat, graph.features, graph.trace_len, EncodeMode::infer, 0);
        std::vector<ScoredLabel> scored;
        scored.reserve(pos.size() + eval_neg.size());
        auto score_of = [&](std::uint32_t u, std::uint32_t v) {
            const double* zu = eval.sample.z.row(u);
            const double* zv = eval.sample.z.row(v);
            double s = 0.0;
            for (std::size_t k = 0; k < eval.sample.z.cols; ++k)
                s += zu[k] * zv[k];
            return sigmoid(s);
        };
        for (std::size_t e = 0; e < pos.size(); ++e)
            scored.push_back({score_of(pos.src[e], pos.dst[e]), true});
        for (std::size_t e = 0; e < eval_neg.size(); ++e)
            scored.push_back({score_of(eval_neg.src[e], eval_neg.dst[e]), false});
        ApAuc metrics = ap_auc(scored);
        double monitor = 0.5 * (metrics.ap + metrics.auc);

        result.history.push_back(
            {epoch, dg.parts.loss, metrics.ap, metrics.auc, lr});
        bool stop = stopper.update(monitor, epoch);
        if (stopper.best_epoch() == epoch) best = model;
        result.stopped_epoch = epoch;
        if (stop) break;
    }

    Fnv1a hd;
    for (const EpochStats& s : result.history) {
        hd.update_u64(s.epoch);
        hd.update_f64(s.loss);
        hd.update_f64(s.ap);
        hd.update_f64(s.auc);
        hd.update_f64(s.lr);
    }
    best.history_digest = hd.value();
    best.seed = cfg.seed;

    result.best_epoch = stopper.best_epoch();
    result.best_monitor = stopper.best();
    result.model = std::move(best);
    return result;
}

std::string model_to_json(const VgaeModel& model) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["feature_dim"] = model.feature_dim;
    doc["layer_dims"] = {model.feature_dim, kHidden1, kHidden2, kHidden3,
                         kLatentDim};
    auto weights = nlohmann::json::array();
    auto biases = nlohmann::json::array();
    for (const GcnLayer* l : model.layers()) {
        auto w = nlohmann::json::array();
        for (std::size_t i = 0; i < l->w.rows; ++i) {
            auto row = nlohmann::json::array();
            for (std::size_t j = 0; j < l->w.cols; ++j)
                row.push_back(l->w.at(i, j));
            w.push_back(std::move(row));
        }
        weights.push_back(std::move(w));
        biases.push_back(l->b);
    }
    doc["weights"] = std::move(weights);
    doc["biases"] = std::move(biases);
    doc["dropout_p"] = model.dropout_p;
    doc["seed"] = model.seed;
    doc["training_history_digest"] = model.history_digest;
    return doc.dump() + "\n";
}

VgaeModel model_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what(), e.byte);
    }
    if (doc.value("format_version", 0) != 1)
        throw ModelError("unsupported model format_version");

    VgaeModel m;
    m.feature_dim = doc.at("feature_dim").get<std::size_t>();
    auto dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    const std::vector<std::size_t> expected{m.feature_dim, kHidden1, kHidden2,
                                            kHidden3, kLatentDim};
    if (dims != expected) throw ModelError("model layer_dims mismatch");
    m.dropout_p = doc.at("dropout_p").get<double>();
    if (!(m.dropout_p >= 0.0 && m.dropout_p < 1.0))
        throw ModelError("dropout_p out of range");
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.history_digest = doc.at("training_history_digest").get<std::uint64_t>();

    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (weights.size() != 5 || biases.size() != 5)
        throw ModelError("model must have exactly 5 layers");

    const std::array<std::pair<std::size_t, std::size_t>, 5> shapes{{
        {m.feature_dim, kHidden1},
        {kHidden1, kHidden2},
        {kHidden2, kHidden3},
        {kHidden3, kLatentDim},
        {kHidden3, kLatentDim},
    }};
    const std::array<Activation, 5> acts{Activation::relu, Activation::relu,
                                         Activation::relu, Activation::none,
                                         Activation::none};
    auto layers = m.layers();
    for (std::size_t l = 0; l < 5; ++l) {
        auto [in, out] = shapes[l];
        const auto& w = weights.at(l);
        if (w.size() != in) throw ModelError("weight row count mismatch");
        layers[l]->w = Matrix(in, out);
        for (std::size_t i = 0; i < in; ++i) {
            const auto& row = w.at(i);
            if (row.size() != out) throw ModelError("weight col count mismatch");
            for (std::size_t j = 0; j < out; ++j)
                layers[l]->w.at(i, j) = row.at(j).get<double>();
        }
        layers[l]->b = biases.at(l).get<std::vector<double>>();
        if (layers[l]->b.size() != out) throw ModelError("bias size mismatch");
        layers[l]->act = acts[l];
    }
    if (parameter_count(m) != parameter_count_for(m.feature_dim))
        throw ModelError("parameter count mismatch");
    return m;
}

void save_model(const VgaeModel& model, const std::filesystem::path& path) {
    std::string bytes = model_to_json(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

VgaeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace cfa
