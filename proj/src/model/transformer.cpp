#include "clgen/model/transformer.hpp"

#include "clgen/common/error.hpp"

#include <cmath>
#include <random>

namespace clgen::model {

using nk::Tape;
using nk::Tensor;

void ModelConfig::validate() const {
    if (num_layers < 1)
        throw InputError("model: num_layers must be >= 1");
    if (num_heads < 1 || hidden < 1 || hidden % num_heads != 0)
        throw InputError("model: hidden must be a positive multiple of num_heads");
    if (vocab_size < 1)
        throw InputError("model: vocab_size must be >= 1");
    if (max_seq_len < 2)
        throw InputError("model: max_seq_len must be >= 2");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw InputError("model: dropout must lie in [0, 1)");
}

TokenBatch TokenBatch::from_sequences(const std::vector<std::vector<int>>& seqs, int pad_id, Index length) {
    if (seqs.empty())
        throw InputError("token batch: no sequences");
    Index longest = 0;
    for (const auto& s : seqs)
        longest = std::max(longest, static_cast<Index>(s.size()));
    if (length == 0)
        length = longest;
    if (longest > length || length < 1)
        throw InputError("token batch: sequence longer than requested length");
    TokenBatch out;
    out.batch = static_cast<Index>(seqs.size());
    out.length = length;
    out.ids.assign(static_cast<std::size_t>(out.batch * length), pad_id);
    out.pad_mask.assign(out.ids.size(), 0);
    for (Index b = 0; b < out.batch; ++b) {
        const auto& s = seqs[static_cast<std::size_t>(b)];
        for (std::size_t t = 0; t < s.size(); ++t) {
            out.ids[static_cast<std::size_t>(b * length) + t] = s[t];
            out.pad_mask[static_cast<std::size_t>(b * length) + t] = 1;
        }
    }
    return out;
}

namespace {

Tensor gaussian(nk::Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, stddev);
    for (Index i = 0; i < t.size(); ++i)
        t[i] = d(rng);
    return t;
}

Var apply_dropout(const Var& x, double rate, Rng* rng) {
    if (rate <= 0.0)
        return x;
    if (!rng)
        throw Error("dropout requires a random stream");
    return nk::mul_constant(x, dropout_mask(x.shape(), rate, *rng));
}

} // namespace

Tensor dropout_mask(const nk::Shape& shape, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw InputError("dropout rate must lie in [0, 1)");
    Tensor mask(shape);
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (Index i = 0; i < mask.size(); ++i)
        mask[i] = keep(rng) ? scale : 0.0;
    return mask;
}

int TransformerLM::add_param(std::string name, Tensor value) {
    params_.emplace_back(std::move(name), std::move(value));
    return static_cast<int>(params_.size()) - 1;
}

TransformerLM::TransformerLM(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng = make_stream(init_seed, "init");
    const Index H = config_.hidden, V = config_.vocab_size;
    constexpr double kStd = 0.02;
    tok_emb_ = add_param("tok_emb", gaussian({V, H}, rng, kStd));
    pos_emb_ = add_param("pos_emb", gaussian({config_.max_seq_len, H}, rng, kStd));
    for (int l = 0; l < config_.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerIds ids{};
        ids.ln1_g = add_param(p + "ln1.gain", Tensor({H}, 1.0));
        ids.ln1_b = add_param(p + "ln1.bias", Tensor({H}));
        ids.wq = add_param(p + "attn.wq", gaussian({H, H}, rng, kStd));
        ids.bq = add_param(p + "attn.bq", Tensor({H}));
        ids.wk = add_param(p + "attn.wk", gaussian({H, H}, rng, kStd));
        ids.bk = add_param(p + "attn.bk", Tensor({H}));
        ids.wv = add_param(p + "attn.wv", gaussian({H, H}, rng, kStd));
        ids.bv = add_param(p + "attn.bv", Tensor({H}));
        ids.wo = add_param(p + "attn.wo", gaussian({H, H}, rng, kStd));
        ids.bo = add_param(p + "attn.bo", Tensor({H}));
        ids.ln2_g = add_param(p + "ln2.gain", Tensor({H}, 1.0));
        ids.ln2_b = add_param(p + "ln2.bias", Tensor({H}));
        ids.w_fc = add_param(p + "mlp.w_fc", gaussian({H, 4 * H}, rng, kStd));
        ids.b_fc = add_param(p + "mlp.b_fc", Tensor({4 * H}));
        ids.w_proj = add_param(p + "mlp.w_proj", gaussian({4 * H, H}, rng, kStd));
        ids.b_proj = add_param(p + "mlp.b_proj", Tensor({H}));
        layers_.push_back(ids);
    }
    lnf_g_ = add_param("ln_f.gain", Tensor({H}, 1.0));
    lnf_b_ = add_param("ln_f.bias", Tensor({H}));
    pool_q_ = add_param("pool.wq", gaussian({H, H}, rng, kStd));
    pool_k_ = add_param("pool.wk", gaussian({H, H}, rng, kStd));
    pool_v_ = add_param("pool.wv", gaussian({H, H}, rng, kStd));
}

template <typename ParamFn>
Var TransformerLM::pool(const Var& last_hidden, const Mask& pad_mask, ParamFn&& param) const {
    const Var mean = nk::masked_mean(last_hidden, pad_mask);
    const Var query = nk::matmul(mean, param(pool_q_));
    const Var keys = nk::matmul(last_hidden, param(pool_k_));
    const Var values = nk::matmul(last_hidden, param(pool_v_));
    return nk::attention_pool(query, keys, values, pad_mask);
}

template <typename ParamFn>
ForwardOutput TransformerLM::run(const TokenBatch& batch, const ForwardOptions& opts, int stop_layer,
                                 ParamFn&& param) const {
    const Index B = batch.batch, T = batch.length;
    if (T > config_.max_seq_len)
        throw InputError("forward: sequence length exceeds max_seq_len");
    if (static_cast<Index>(batch.ids.size()) != B * T || static_cast<Index>(batch.pad_mask.size()) != B * T)
        throw InputError("forward: malformed token batch");
    for (int id : batch.ids)
        if (id < 0 || id >= config_.vocab_size)
            throw InputError("forward: token id out of vocabulary");
    if (opts.inject) {
        if (opts.inject->layer < 0 || opts.inject->layer > config_.num_layers)
            throw InputError("forward: injection layer out of range");
        if (!(opts.inject->lambda >= 0.0 && opts.inject->lambda <= 1.0))
            throw InputError("forward: injection lambda must lie in [0, 1]");
    }
    const double rate = opts.training ? (opts.dropout >= 0 ? opts.dropout : config_.dropout) : 0.0;

    auto mix = [&](const Var& h, int layer) -> Var {
        if (!opts.inject || opts.inject->layer != layer)
            return h;
        const MixInjection& inj = *opts.inject;
        if (!inj.partner.valid() || inj.partner.shape() != h.shape())
            throw InputError("forward: partner hidden state shape mismatch");
        if (inj.lambda == 1.0)
            return h;
        return nk::axpby(inj.lambda, h, 1.0 - inj.lambda, inj.partner);
    };

    std::vector<int> positions(static_cast<std::size_t>(B * T));
    for (Index b = 0; b < B; ++b)
        for (Index t = 0; t < T; ++t)
            positions[static_cast<std::size_t>(b * T + t)] = static_cast<int>(t);

    ForwardOutput out;
    Var h = nk::add(nk::embedding(param(tok_emb_), batch.ids, {B, T}), nk::embedding(param(pos_emb_), positions, {B, T}));
    h = mix(apply_dropout(h, rate, opts.rng), 0);
    out.hiddens.push_back(h);

    const int last = stop_layer < 0 ? config_.num_layers : stop_layer;
    for (int l = 0; l < last; ++l) {
        const LayerIds& p = layers_[static_cast<std::size_t>(l)];
        const Var a = nk::layer_norm(h, param(p.ln1_g), param(p.ln1_b));
        const Var q = nk::add_row_vector(nk::matmul(a, param(p.wq)), param(p.bq));
        const Var k = nk::add_row_vector(nk::matmul(a, param(p.wk)), param(p.bk));
        const Var v = nk::add_row_vector(nk::matmul(a, param(p.wv)), param(p.bv));
        const Var att = nk::causal_self_attention(q, k, v, config_.num_heads);
        const Var o = nk::add_row_vector(nk::matmul(att, param(p.wo)), param(p.bo));
        h = nk::add(h, apply_dropout(o, rate, opts.rng));
        const Var m = nk::layer_norm(h, param(p.ln2_g), param(p.ln2_b));
        const Var f = nk::gelu(nk::add_row_vector(nk::matmul(m, param(p.w_fc)), param(p.b_fc)));
        const Var proj = nk::add_row_vector(nk::matmul(f, param(p.w_proj)), param(p.b_proj));
        h = nk::add(h, apply_dropout(proj, rate, opts.rng));
        h = mix(h, l + 1);
        out.hiddens.push_back(h);
    }
    if (stop_layer >= 0)
        return out;

    const Var final_norm = nk::layer_norm(h, param(lnf_g_), param(lnf_b_));
    out.logits = nk::matmul_transposed(final_norm, param(tok_emb_));
    out.pooled = pool(h, opts.pool_mask ? *opts.pool_mask : batch.pad_mask, param);
    return out;
}

ForwardOutput TransformerLM::forward(Tape& tape, const TokenBatch& batch, const ForwardOptions& opts) {
    return run(batch, opts, -1,
               [&](int idx) { return tape.parameter(params_[static_cast<std::size_t>(idx)]); });
}

ForwardOutput TransformerLM::infer(Tape& tape, const TokenBatch& batch, const ForwardOptions& opts) const {
    return run(batch, opts, -1,
               [&](int idx) { return tape.constant(params_[static_cast<std::size_t>(idx)].value()); });
}

Var TransformerLM::hidden_at(Tape& tape, const TokenBatch& batch, int layer, const ForwardOptions& opts) {
    if (layer < 0 || layer > config_.num_layers)
        throw InputError("hidden_at: layer out of range");
    ForwardOptions plain = opts;
    plain.inject.reset();
    const ForwardOutput out = run(batch, plain, layer,
                                  [&](int idx) { return tape.parameter(params_[static_cast<std::size_t>(idx)]); });
    return out.hiddens[static_cast<std::size_t>(layer)];
}

nk::RowMatrix TransformerLM::next_logits(const TokenBatch& batch, std::span<const Index> positions) const {
    if (static_cast<Index>(positions.size()) != batch.batch)
        throw InputError("next_logits: one position per row required");
    Tape tape(false);
    auto param = [&](int idx) { return tape.constant(params_[static_cast<std::size_t>(idx)].value()); };
    const ForwardOutput out = run(batch, {}, config_.num_layers, param);
    std::vector<Index> rows(positions.size());
    for (std::size_t b = 0; b < positions.size(); ++b) {
        if (positions[b] < 0 || positions[b] >= batch.length)
            throw InputError("next_logits: position out of range");
        rows[b] = static_cast<Index>(b) * batch.length + positions[b];
    }
    const Var h = nk::gather_rows(out.hiddens.back(), rows);
    const Var normed = nk::layer_norm(h, param(lnf_g_), param(lnf_b_));
    return nk::matmul_transposed(normed, param(tok_emb_)).value().matrix();
}

Var TransformerLM::sentence_pool(Tape& tape, const Var& last_hidden, const Mask& pad_mask) {
    return pool(last_hidden, pad_mask, [&](int idx) { return tape.parameter(params_[static_cast<std::size_t>(idx)]); });
}

nk::Parameter& TransformerLM::parameter(const std::string& name) {
    for (auto& p : params_)
        if (p.name() == name)
            return p;
    throw InputError("unknown parameter: " + name);
}

void TransformerLM::zero_grad() {
    for (auto& p : params_)
        p.zero_grad();
}

std::size_t TransformerLM::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_)
        n += static_cast<std::size_t>(p.value().size());
    return n;
}

void TransformerLM::set_pool_identity() {
    for (int idx : {pool_q_, pool_k_, pool_v_}) {
        Tensor& w = params_[static_cast<std::size_t>(idx)].value();
        w.matrix().setIdentity();
    }
}

void TransformerLM::assign_values(const TransformerLM& other) {
    if (other.params_.size() != params_.size())
        throw InputError("assign_values: parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (other.params_[i].name() != params_[i].name() ||
            other.params_[i].value().shape() != params_[i].value().shape())
            throw InputError("assign_values: parameter mismatch at " + params_[i].name());
        params_[i].value() = other.params_[i].value();
    }
}

Var lm_loss(const Var& logits, std::span<const nk::SoftTarget> targets, const Mask& loss_mask) {
    return nk::soft_cross_entropy(logits, targets, loss_mask);
}

Var token_matrix(const Var& last_hidden, const Mask& pad_mask) {
    if (static_cast<Index>(pad_mask.size()) != last_hidden.value().rows())
        throw InputError("token_matrix: mask size mismatch");
    std::vector<Index> rows;
    for (std::size_t i = 0; i < pad_mask.size(); ++i)
        if (pad_mask[i])
            rows.push_back(static_cast<Index>(i));
    return nk::gather_rows(last_hidden, rows);
}

} // namespace clgen::model
