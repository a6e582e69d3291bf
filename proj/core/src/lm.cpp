#include "cktfed/lm.hpp"

#include "cktfed/error.hpp"
#include "cktfed/random.hpp"
#include "cktfed/token.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace cktfed {

void ModelConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (n_layers < 1) bad("n_layers must be >= 1");
    if (n_heads < 1) bad("n_heads must be >= 1");
    if (d_model < 1 || d_model % n_heads) bad("d_model must be a positive multiple of n_heads");
    if (context_len < 2) bad("context_len must be >= 2");
    if (vocab_size < kSpecialCount) bad("vocab_size must cover the special tokens");
}

ModelConfig model_preset(std::string_view name, int vocab_size) {
    ModelConfig c;
    if (name == "full") c = {6, 6, 384, 1024, 1029, false};
    else if (name == "desk") c = {2, 2, 64, 256, 0, false};
    else if (name == "micro") c = {1, 2, 16, 96, 0, false};
    else throw Error(ErrorCode::InvalidConfig, "unknown model preset '" + std::string(name) + "'");
    if (vocab_size > 0) c.vocab_size = vocab_size;
    return c;
}

const TensorSpec& Manifest::at(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw Error(ErrorCode::ManifestMismatch, "no tensor named " + std::string(name));
}

Manifest make_manifest(const ModelConfig& c) {
    c.validate();
    Manifest m;
    auto add = [&](std::string name, int rows, int cols) {
        m.tensors.push_back({std::move(name), rows, cols, m.total});
        m.total += m.tensors.back().size();
    };
    const int d = c.d_model;
    add("tok_emb", c.vocab_size, d);
    add("pos_emb", c.context_len, d);
    for (int l = 0; l < c.n_layers; ++l) {
        const std::string h = "h" + std::to_string(l) + ".";
        add(h + "ln1.g", 1, d);
        add(h + "ln1.b", 1, d);
        add(h + "attn.w_qkv", d, 3 * d);
        add(h + "attn.b_qkv", 1, 3 * d);
        add(h + "attn.w_out", d, d);
        add(h + "attn.b_out", 1, d);
        add(h + "ln2.g", 1, d);
        add(h + "ln2.b", 1, d);
        add(h + "mlp.w_in", d, c.d_ff());
        add(h + "mlp.b_in", 1, c.d_ff());
        add(h + "mlp.w_out", c.d_ff(), d);
        add(h + "mlp.b_out", 1, d);
    }
    add("ln_f.g", 1, d);
    add("ln_f.b", 1, d);
    if (!c.tie_embeddings) add("head.w", d, c.vocab_size);
    add("head.b", 1, c.vocab_size);
    return m;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
    auto m = make_manifest(config);
    ModelParams p{config, std::vector<float>(m.total, 0.0f)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double residual = 0.02 / std::sqrt(2.0 * config.n_layers);
    for (const auto& t : m.tensors) {
        const auto& n = t.name;
        double stddev = 0.0;
        if (n.ends_with(".g")) {
            std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), 1.0f);
            continue;
        }
        if (n.ends_with("w_out")) stddev = residual;
        else if (n == "tok_emb" || n == "pos_emb" || n.find(".w_") != std::string::npos || n == "head.w") stddev = 0.02;
        if (stddev == 0.0) continue;
        for (std::size_t i = 0; i < t.size(); ++i) p.values[t.offset + i] = static_cast<float>(stddev * normal(rng));
    }
    return p;
}

namespace {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <class S>
using CMap = Eigen::Map<const Mat<S>>;
template <class S>
using CVec = Eigen::Map<const RowVec<S>>;
template <class S>
using GMap = Eigen::Map<Mat<S>>;
template <class S>
using GVec = Eigen::Map<RowVec<S>>;

struct LayerOffsets {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_out, b_out, ln2_g, ln2_b, w_in, b_in, w_mo, b_mo;
};

struct Offsets {
    std::size_t tok, pos, lnf_g, lnf_b, head_w, head_b;
    std::vector<LayerOffsets> layers;
};

Offsets offsets_of(const ModelConfig& c, const Manifest& m) {
    Offsets o{};
    o.tok = m.at("tok_emb").offset;
    o.pos = m.at("pos_emb").offset;
    for (int l = 0; l < c.n_layers; ++l) {
        const std::string h = "h" + std::to_string(l) + ".";
        o.layers.push_back({m.at(h + "ln1.g").offset, m.at(h + "ln1.b").offset, m.at(h + "attn.w_qkv").offset,
                            m.at(h + "attn.b_qkv").offset, m.at(h + "attn.w_out").offset,
                            m.at(h + "attn.b_out").offset, m.at(h + "ln2.g").offset, m.at(h + "ln2.b").offset,
                            m.at(h + "mlp.w_in").offset, m.at(h + "mlp.b_in").offset, m.at(h + "mlp.w_out").offset,
                            m.at(h + "mlp.b_out").offset});
    }
    o.lnf_g = m.at("ln_f.g").offset;
    o.lnf_b = m.at("ln_f.b").offset;
    o.head_w = c.tie_embeddings ? o.tok : m.at("head.w").offset;
    o.head_b = m.at("head.b").offset;
    return o;
}

constexpr double kLnEps = 1e-5;

template <class S>
struct LnCache {
    Mat<S> xhat;
    std::vector<S> rstd;
};

template <class S>
Mat<S> ln_forward(const Mat<S>& x, const S* g, const S* b, LnCache<S>& cache) {
    const auto rows = x.rows(), d = x.cols();
    cache.xhat.resize(rows, d);
    cache.rstd.resize(static_cast<std::size_t>(rows));
    Mat<S> y(rows, d);
    CVec<S> gv(g, d), bv(b, d);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const S mean = x.row(r).mean();
        const S var = (x.row(r).array() - mean).square().mean();
        const S rs = S(1) / std::sqrt(var + S(kLnEps));
        cache.rstd[r] = rs;
        cache.xhat.row(r) = (x.row(r).array() - mean) * rs;
        y.row(r) = cache.xhat.row(r).cwiseProduct(gv) + bv;
    }
    return y;
}

template <class S>
Mat<S> ln_backward(const Mat<S>& dy, const LnCache<S>& cache, const S* g, S* dg, S* db) {
    const auto rows = dy.rows(), d = dy.cols();
    CVec<S> gv(g, d);
    GVec<S>(dg, d) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    GVec<S>(db, d) += dy.colwise().sum();
    Mat<S> dx(rows, d);
    for (Eigen::Index r = 0; r < rows; ++r) {
        RowVec<S> dxhat = dy.row(r).cwiseProduct(gv);
        const S m1 = dxhat.mean();
        const S m2 = dxhat.cwiseProduct(cache.xhat.row(r)).mean();
        dx.row(r) = cache.rstd[r] * (dxhat.array() - m1 - cache.xhat.row(r).array() * m2);
    }
    return dx;
}

template <class S>
S gelu(S u) {
    constexpr S c = S(0.7978845608028654);
    return S(0.5) * u * (S(1) + std::tanh(c * (u + S(0.044715) * u * u * u)));
}

template <class S>
S gelu_grad(S u) {
    constexpr S c = S(0.7978845608028654);
    const S t = std::tanh(c * (u + S(0.044715) * u * u * u));
    return S(0.5) * (S(1) + t) + S(0.5) * u * (S(1) - t * t) * c * (S(1) + S(3) * S(0.044715) * u * u);
}

template <class S>
struct LayerCache {
    Mat<S> h_in;
    LnCache<S> ln1;
    Mat<S> a;
    Mat<S> qkv;
    std::vector<Mat<S>> probs;
    Mat<S> o;
    Mat<S> h_mid;
    LnCache<S> ln2;
    Mat<S> m;
    Mat<S> u;
    Mat<S> act;
};

// One transformer over a flat parameter array; gradients go to `grad` when set.
template <class S>
class Network {
public:
    Network(const ModelConfig& c, const Offsets& o, const S* p) : c_(c), o_(o), p_(p) {}

    // Final-layer-norm output and logits for `ids` (length L).
    Mat<S> forward(const std::vector<int>& ids, bool keep) {
        const int L = static_cast<int>(ids.size());
        const int d = c_.d_model;
        CMap<S> tok(p_ + o_.tok, c_.vocab_size, d);
        CMap<S> pos(p_ + o_.pos, c_.context_len, d);
        Mat<S> h(L, d);
        for (int t = 0; t < L; ++t) h.row(t) = tok.row(ids[t]) + pos.row(t);
        layers_.assign(keep ? static_cast<std::size_t>(c_.n_layers) : 1, {});
        const int nh = c_.n_heads, dh = d / nh;
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));
        for (int l = 0; l < c_.n_layers; ++l) {
            auto& lc = layers_[keep ? static_cast<std::size_t>(l) : 0];
            const auto& lo = o_.layers[l];
            lc.h_in = h;
            lc.a = ln_forward<S>(h, p_ + lo.ln1_g, p_ + lo.ln1_b, lc.ln1);
            lc.qkv.noalias() = lc.a * CMap<S>(p_ + lo.w_qkv, d, 3 * d);
            lc.qkv.rowwise() += CVec<S>(p_ + lo.b_qkv, 3 * d);
            lc.o.resize(L, d);
            lc.probs.resize(static_cast<std::size_t>(nh));
            for (int hd = 0; hd < nh; ++hd) {
                auto q = lc.qkv.block(0, hd * dh, L, dh);
                auto k = lc.qkv.block(0, d + hd * dh, L, dh);
                auto v = lc.qkv.block(0, 2 * d + hd * dh, L, dh);
                Mat<S> s = (q * k.transpose()) * scale;
                for (int i = 0; i < L; ++i) {
                    const S mx = s.row(i).head(i + 1).maxCoeff();
                    S sum = 0;
                    for (int j = 0; j <= i; ++j) {
                        s(i, j) = std::exp(s(i, j) - mx);
                        sum += s(i, j);
                    }
                    for (int j = 0; j <= i; ++j) s(i, j) /= sum;
                    for (int j = i + 1; j < L; ++j) s(i, j) = 0;
                }
                lc.o.block(0, hd * dh, L, dh).noalias() = s * v;
                lc.probs[hd] = std::move(s);
            }
            Mat<S> attn = lc.o * CMap<S>(p_ + lo.w_out, d, d);
            attn.rowwise() += CVec<S>(p_ + lo.b_out, d);
            lc.h_mid = h + attn;
            lc.m = ln_forward<S>(lc.h_mid, p_ + lo.ln2_g, p_ + lo.ln2_b, lc.ln2);
            lc.u.noalias() = lc.m * CMap<S>(p_ + lo.w_in, d, c_.d_ff());
            lc.u.rowwise() += CVec<S>(p_ + lo.b_in, c_.d_ff());
            lc.act = lc.u.unaryExpr([](S x) { return gelu(x); });
            Mat<S> f = lc.act * CMap<S>(p_ + lo.w_mo, c_.d_ff(), d);
            f.rowwise() += CVec<S>(p_ + lo.b_mo, d);
            h = lc.h_mid + f;
        }
        z_ = ln_forward<S>(h, p_ + o_.lnf_g, p_ + o_.lnf_b, lnf_);
        Mat<S> logits;
        if (c_.tie_embeddings) logits.noalias() = z_ * tok.transpose();
        else logits.noalias() = z_ * CMap<S>(p_ + o_.head_w, d, c_.vocab_size);
        logits.rowwise() += CVec<S>(p_ + o_.head_b, c_.vocab_size);
        return logits;
    }

    // Backward pass from dlogits; requires forward(..., keep = true).
    void backward(const std::vector<int>& ids, const Mat<S>& dlogits, S* g) {
        const int L = static_cast<int>(ids.size());
        const int d = c_.d_model, dff = c_.d_ff();
        const int nh = c_.n_heads, dh = d / nh;
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));
        GVec<S>(g + o_.head_b, c_.vocab_size) += dlogits.colwise().sum();
        Mat<S> dz;
        if (c_.tie_embeddings) {
            CMap<S> tok(p_ + o_.tok, c_.vocab_size, d);
            GMap<S>(g + o_.tok, c_.vocab_size, d).noalias() += dlogits.transpose() * z_;
            dz.noalias() = dlogits * tok;
        } else {
            GMap<S>(g + o_.head_w, d, c_.vocab_size).noalias() += z_.transpose() * dlogits;
            dz.noalias() = dlogits * CMap<S>(p_ + o_.head_w, d, c_.vocab_size).transpose();
        }
        Mat<S> dh_ = ln_backward<S>(dz, lnf_, p_ + o_.lnf_g, g + o_.lnf_g, g + o_.lnf_b);
        for (int l = c_.n_layers - 1; l >= 0; --l) {
            auto& lc = layers_[l];
            const auto& lo = o_.layers[l];
            // feed-forward
            CMap<S> w_mo(p_ + lo.w_mo, dff, d);
            GMap<S>(g + lo.w_mo, dff, d).noalias() += lc.act.transpose() * dh_;
            GVec<S>(g + lo.b_mo, d) += dh_.colwise().sum();
            Mat<S> du = dh_ * w_mo.transpose();
            du = du.cwiseProduct(lc.u.unaryExpr([](S x) { return gelu_grad(x); }));
            GMap<S>(g + lo.w_in, d, dff).noalias() += lc.m.transpose() * du;
            GVec<S>(g + lo.b_in, dff) += du.colwise().sum();
            Mat<S> dm = du * CMap<S>(p_ + lo.w_in, d, dff).transpose();
            Mat<S> dmid = dh_ + ln_backward<S>(dm, lc.ln2, p_ + lo.ln2_g, g + lo.ln2_g, g + lo.ln2_b);
            // attention
            GMap<S>(g + lo.w_out, d, d).noalias() += lc.o.transpose() * dmid;
            GVec<S>(g + lo.b_out, d) += dmid.colwise().sum();
            Mat<S> dout = dmid * CMap<S>(p_ + lo.w_out, d, d).transpose();
            Mat<S> dqkv(L, 3 * d);
            for (int hd = 0; hd < nh; ++hd) {
                const auto& pr = lc.probs[hd];
                auto q = lc.qkv.block(0, hd * dh, L, dh);
                auto k = lc.qkv.block(0, d + hd * dh, L, dh);
                auto v = lc.qkv.block(0, 2 * d + hd * dh, L, dh);
                auto dO = dout.block(0, hd * dh, L, dh);
                Mat<S> dp = dO * v.transpose();
                dqkv.block(0, 2 * d + hd * dh, L, dh).noalias() = pr.transpose() * dO;
                Mat<S> ds(L, L);
                for (int i = 0; i < L; ++i) {
                    const S dot = pr.row(i).dot(dp.row(i));
                    ds.row(i) = pr.row(i).cwiseProduct((dp.row(i).array() - dot).matrix()) * scale;
                }
                dqkv.block(0, hd * dh, L, dh).noalias() = ds * k;
                dqkv.block(0, d + hd * dh, L, dh).noalias() = ds.transpose() * q;
            }
            GMap<S>(g + lo.w_qkv, d, 3 * d).noalias() += lc.a.transpose() * dqkv;
            GVec<S>(g + lo.b_qkv, 3 * d) += dqkv.colwise().sum();
            Mat<S> da = dqkv * CMap<S>(p_ + lo.w_qkv, d, 3 * d).transpose();
            dh_ = dmid + ln_backward<S>(da, lc.ln1, p_ + lo.ln1_g, g + lo.ln1_g, g + lo.ln1_b);
        }
        GMap<S> dtok(g + o_.tok, c_.vocab_size, d);
        GMap<S> dpos(g + o_.pos, c_.context_len, d);
        for (int t = 0; t < L; ++t) {
            dtok.row(ids[t]) += dh_.row(t);
            dpos.row(t) += dh_.row(t);
        }
    }

private:
    const ModelConfig& c_;
    const Offsets& o_;
    const S* p_;
    std::vector<LayerCache<S>> layers_;
    Mat<S> z_;
    LnCache<S> lnf_;
};

std::vector<int> trimmed(const std::vector<int>& seq) {
    std::size_t n = seq.size();
    while (n > 0 && seq[n - 1] == kPadId) --n;
    return {seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n)};
}

void check_ids(const ModelConfig& c, const std::vector<int>& ids) {
    if (static_cast<int>(ids.size()) > c.context_len)
        throw Error(ErrorCode::SequenceTooLong, "sequence of length " + std::to_string(ids.size()) +
                                                    " exceeds context_len " + std::to_string(c.context_len));
    for (int id : ids)
        if (id < 0 || id >= c.vocab_size) throw Error(ErrorCode::IdOutOfRange, "token id " + std::to_string(id) + " out of range");
}

} // namespace

template <class S>
LossGrad<S> loss_and_grad(const ModelConfig& config, const std::vector<S>& params, const Batch& batch, bool with_grad) {
    if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss of an empty batch");
    const auto manifest = make_manifest(config);
    if (params.size() != manifest.total) throw Error(ErrorCode::ManifestMismatch, "parameter vector does not match the model");
    const auto offsets = offsets_of(config, manifest);
    std::vector<std::vector<int>> seqs;
    seqs.reserve(batch.size());
    std::size_t total = 0;
    for (const auto& s : batch) {
        check_ids(config, s);
        seqs.push_back(trimmed(s));
        for (std::size_t t = 1; t < seqs.back().size(); ++t)
            if (seqs.back()[t] != kPadId) ++total;
    }
    LossGrad<S> out;
    out.predictions = total;
    if (with_grad) out.grad.assign(params.size(), S(0));
    if (total == 0) return out;
    const S inv = S(1) / static_cast<S>(total);
    Network<S> net(config, offsets, params.data());
    double sum = 0.0;
    for (const auto& ids : seqs) {
        if (ids.size() < 2) continue;
        auto logits = net.forward(ids, with_grad);
        const int L = static_cast<int>(ids.size());
        Mat<S> dlogits;
        if (with_grad) dlogits = Mat<S>::Zero(L, config.vocab_size);
        for (int t = 0; t + 1 < L; ++t) {
            const int target = ids[t + 1];
            if (target == kPadId) continue;
            auto row = logits.row(t);
            const S mx = row.maxCoeff();
            RowVec<S> e = (row.array() - mx).exp().matrix();
            const S z = e.sum();
            sum += static_cast<double>(std::log(z) + mx - row(target));
            if (with_grad) {
                dlogits.row(t) = e * (inv / z);
                dlogits(t, target) -= inv;
            }
        }
        if (with_grad) net.backward(ids, dlogits, out.grad.data());
    }
    out.loss = sum / static_cast<double>(total);
    return out;
}

template LossGrad<float> loss_and_grad<float>(const ModelConfig&, const std::vector<float>&, const Batch&, bool);
template LossGrad<double> loss_and_grad<double>(const ModelConfig&, const std::vector<double>&, const Batch&, bool);

double evaluate_loss(const ModelParams& params, const Batch& data, std::size_t chunk) {
    if (data.empty()) throw Error(ErrorCode::EmptyBatch, "evaluate_loss on an empty dataset");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); i += chunk) {
        Batch b(data.begin() + static_cast<std::ptrdiff_t>(i),
                data.begin() + static_cast<std::ptrdiff_t>(std::min(data.size(), i + chunk)));
        auto r = loss_and_grad<float>(params.config, params.values, b, false);
        sum += r.loss * static_cast<double>(r.predictions);
        count += r.predictions;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

std::vector<float> forward_logits(const ModelParams& params, const std::vector<int>& ids) {
    if (ids.empty()) throw Error(ErrorCode::EmptySequence, "forward_logits of an empty sequence");
    check_ids(params.config, ids);
    const auto manifest = make_manifest(params.config);
    if (params.values.size() != manifest.total) throw Error(ErrorCode::ManifestMismatch, "parameter vector does not match the model");
    const auto offsets = offsets_of(params.config, manifest);
    Network<float> net(params.config, offsets, params.values.data());
    Mat<float> logits = net.forward(ids, false);
    return {logits.data(), logits.data() + logits.size()};
}

std::vector<std::size_t> sample_batch_indices(std::size_t n, int batch, std::uint64_t seed, std::uint64_t step) {
    if (n == 0) throw Error(ErrorCode::EmptyBatch, "cannot sample from an empty dataset");
    std::mt19937_64 rng(derive_seed(seed, step));
    std::vector<std::size_t> idx(static_cast<std::size_t>(std::max(batch, 0)));
    for (auto& i : idx) i = static_cast<std::size_t>(rng() % n);
    return idx;
}

TrainResult train_steps(const ModelParams& params, const Batch& data, const TrainOptions& options) {
    TrainResult out{params, std::nullopt};
    if (options.steps <= 0) return out;
    if (data.empty()) throw Error(ErrorCode::EmptyBatch, "training data is empty");
    if (options.batch < 1) throw Error(ErrorCode::InvalidArgument, "batch must be >= 1");
    auto& w = out.params.values;
    std::vector<float> m1, m2;
    if (options.optimizer == Optimizer::Adam) {
        m1.assign(w.size(), 0.0f);
        m2.assign(w.size(), 0.0f);
    }
    const float lr = static_cast<float>(options.lr);
    double loss_sum = 0.0;
    for (int s = 0; s < options.steps; ++s) {
        auto idx = sample_batch_indices(data.size(), options.batch, options.seed, options.step_offset + static_cast<std::uint64_t>(s));
        Batch b;
        b.reserve(idx.size());
        for (auto i : idx) b.push_back(data[i]);
        auto r = loss_and_grad<float>(out.params.config, w, b, true);
        loss_sum += r.loss;
        auto& g = r.grad;
        if (options.clip_norm > 0.0) {
            double sq = 0.0;
            for (float x : g) sq += static_cast<double>(x) * x;
            const double norm = std::sqrt(sq);
            if (norm > options.clip_norm) {
                const float f = static_cast<float>(options.clip_norm / norm);
                for (float& x : g) x *= f;
            }
        }
        if (options.optimizer == Optimizer::Sgd) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        } else {
            constexpr float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
            const float c1 = 1.0f - std::pow(b1, static_cast<float>(s + 1));
            const float c2 = 1.0f - std::pow(b2, static_cast<float>(s + 1));
            for (std::size_t i = 0; i < w.size(); ++i) {
                m1[i] = b1 * m1[i] + (1.0f - b1) * g[i];
                m2[i] = b2 * m2[i] + (1.0f - b2) * g[i] * g[i];
                w[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
            }
        }
    }
    out.mean_loss = loss_sum / options.steps;
    return out;
}

TokenSequence generate(const ModelParams& params, const Vocabulary& vocab, const GenerateOptions& options) {
    if (options.temperature < 0.0 || !std::isfinite(options.temperature))
        throw Error(ErrorCode::InvalidTemperature, "temperature must be >= 0");
    const auto& c = params.config;
    if (options.max_len > c.context_len) throw Error(ErrorCode::SequenceTooLong, "max_len exceeds context_len");
    if (vocab.size() != c.vocab_size) throw Error(ErrorCode::ManifestMismatch, "vocabulary does not match the model");
    std::vector<int> ids{kBosId};
    if (!options.tag.empty()) {
        if (!vocab.contains(options.tag)) throw Error(ErrorCode::UnknownToken, "unknown tag " + options.tag);
        ids.push_back(vocab.id(options.tag));
    }
    const std::size_t prompt = ids.size();
    std::vector<char> is_tag(static_cast<std::size_t>(vocab.size()), 0);
    for (int i = kSpecialCount; i < vocab.size(); ++i)
        is_tag[i] = classify_token(vocab.token(i)).kind == TokenKind::TypeTag;
    std::mt19937_64 rng(options.seed);
    int produced = 0;
    while (produced < options.max_len && static_cast<int>(ids.size()) < c.context_len) {
        auto logits = forward_logits(params, ids);
        const float* row = logits.data() + (ids.size() - 1) * static_cast<std::size_t>(c.vocab_size);
        const bool first = ids.size() == prompt;
        std::vector<double> z(static_cast<std::size_t>(c.vocab_size));
        for (int v = 0; v < c.vocab_size; ++v) {
            const bool banned = v == kPadId || v == kBosId || v == kUnkId || (is_tag[v] && !(first && options.tag.empty()));
            z[v] = banned ? -INFINITY : static_cast<double>(row[v]);
        }
        int next;
        if (options.temperature == 0.0) {
            next = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        } else {
            const double mx = *std::max_element(z.begin(), z.end());
            double total = 0.0;
            for (auto& x : z) {
                x = std::exp((x - mx) / options.temperature);
                total += x;
            }
            double r = uniform01(rng) * total;
            next = c.vocab_size - 1;
            for (int v = 0; v < c.vocab_size; ++v) {
                r -= z[v];
                if (r < 0 && z[v] > 0) {
                    next = v;
                    break;
                }
            }
            while (next > 0 && z[next] == 0) --next;
        }
        if (next == kEosId) break;
        ids.push_back(next);
        if (!is_tag[next]) ++produced;
    }
    return ids_to_sequence(vocab, ids);
}

std::vector<std::vector<float>> embed_tokens(const ModelParams& params, const std::vector<int>& ids) {
    const auto& c = params.config;
    const auto t = make_manifest(c).at("tok_emb");
    std::vector<std::vector<float>> out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || id >= c.vocab_size) throw Error(ErrorCode::IdOutOfRange, "token id " + std::to_string(id) + " out of range");
        const float* row = params.values.data() + t.offset + static_cast<std::size_t>(id) * static_cast<std::size_t>(c.d_model);
        out.emplace_back(row, row + c.d_model);
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    const auto m = make_manifest(params.config);
    if (params.values.size() != m.total) throw Error(ErrorCode::ManifestMismatch, "parameter vector does not match the model");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const auto& c = params.config;
    out << "cktfed-checkpoint 1\n"
        << "n_layers " << c.n_layers << "\nn_heads " << c.n_heads << "\nd_model " << c.d_model << "\ncontext_len "
        << c.context_len << "\nvocab_size " << c.vocab_size << "\ntie_embeddings " << (c.tie_embeddings ? 1 : 0)
        << "\ntensors " << m.tensors.size() << '\n';
    for (const auto& t : m.tensors) out << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    out << "data\n";
    std::vector<char> bytes(params.values.size() * 4);
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        auto u = std::bit_cast<std::uint32_t>(params.values[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    auto fail = [&](const std::string& m) -> void { throw Error(ErrorCode::FormatError, path.string() + ": " + m); };
    std::string line;
    if (!std::getline(in, line) || line != "cktfed-checkpoint 1") fail("not a checkpoint file");
    ModelConfig c;
    auto read_int = [&](const std::string& key) {
        std::string k;
        long v = 0;
        if (!std::getline(in, line)) fail("truncated header");
        std::istringstream ls(line);
        if (!(ls >> k >> v) || k != key) fail("expected " + key);
        return static_cast<int>(v);
    };
    c.n_layers = read_int("n_layers");
    c.n_heads = read_int("n_heads");
    c.d_model = read_int("d_model");
    c.context_len = read_int("context_len");
    c.vocab_size = read_int("vocab_size");
    c.tie_embeddings = read_int("tie_embeddings") != 0;
    const int n = read_int("tensors");
    Manifest expected;
    try {
        expected = make_manifest(c);
    } catch (const Error& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    if (n != static_cast<int>(expected.tensors.size())) throw Error(ErrorCode::ManifestMismatch, "tensor count mismatch");
    for (const auto& t : expected.tensors) {
        if (!std::getline(in, line)) fail("truncated manifest");
        std::istringstream ls(line);
        std::string name;
        int r = 0, cl = 0;
        ls >> name >> r >> cl;
        if (name != t.name || r != t.rows || cl != t.cols) throw Error(ErrorCode::ManifestMismatch, "manifest mismatch at " + line);
    }
    if (!std::getline(in, line) || line != "data") fail("missing data marker");
    std::vector<char> bytes(expected.total * 4);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) fail("truncated parameter data");
    if (in.peek() != std::char_traits<char>::eof()) fail("trailing bytes after parameters");
    ModelParams p{c, std::vector<float>(expected.total)};
    for (std::size_t i = 0; i < expected.total; ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        p.values[i] = std::bit_cast<float>(u);
    }
    return p;
}

} // namespace cktfed
