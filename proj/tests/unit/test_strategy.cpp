#include "clgen/numkernel/linalg.hpp"
#include "clgen/strategy/config.hpp"
#include "clgen/strategy/objectives.hpp"
#include "clgen/strategy/optimizer.hpp"
#include "clgen/strategy/trainer.hpp"
#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace clgen;
using namespace clgen::strategy;
using clgen::testing::random_tensor;
using data::Example;
using data::Tokenizer;
using nk::Tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bnnm_value(const Tensor& z) {
    nk::Tape tape(false);
    return bnnm_loss(tape.constant(z)).value().item();
}

Example make_example(const std::string& domain, std::vector<int> x, std::vector<int> y) {
    Example e;
    e.domain = domain;
    e.input_tokens = x;
    e.target_tokens = y;
    e.tokens.push_back(Tokenizer::kBos);
    e.tokens.insert(e.tokens.end(), x.begin(), x.end());
    e.tokens.push_back(Tokenizer::kSep);
    e.tokens.insert(e.tokens.end(), y.begin(), y.end());
    e.tokens.push_back(Tokenizer::kEos);
    e.loss_mask.assign(e.tokens.size(), 0);
    std::fill(e.loss_mask.begin() + static_cast<std::ptrdiff_t>(x.size() + 2), e.loss_mask.end(), 1);
    return e;
}

// Each domain maps a short input onto a domain-specific response pattern.
std::vector<Example> toy_domain(const std::string& name, int offset, int n) {
    std::vector<Example> out;
    for (int i = 0; i < n; ++i)
        out.push_back(make_example(name, {7 + i % 3, 10 + offset}, {10 + offset, 11 + offset, 7 + i % 3}));
    return out;
}

model::ModelConfig tiny_model() {
    model::ModelConfig c;
    c.num_layers = 2;
    c.num_heads = 2;
    c.hidden = 16;
    c.vocab_size = 24;
    c.max_seq_len = 16;
    c.dropout = 0.1;
    return c;
}

StrategyConfig quick(StrategyKind kind) {
    StrategyConfig c = StrategyConfig::defaults(kind, data::Mode::TaskOriented);
    c.epochs = 1;
    c.batch_size = 4;
    c.memory = 2;
    c.lr = 1e-2;
    c.fisher_samples = 4;
    return c;
}

std::vector<Tensor> values_of(const model::TransformerLM& m) {
    std::vector<Tensor> v;
    for (const auto& p : m.parameters())
        v.push_back(p.value());
    return v;
}

} // namespace

TEST(Config, DefaultsFollowCorpusMode) {
    EXPECT_EQ(StrategyConfig::defaults(StrategyKind::TMBNNM, data::Mode::TaskOriented).kappa, 0.4);
    EXPECT_EQ(StrategyConfig::defaults(StrategyKind::TMBNNM, data::Mode::Chitchat).kappa, 0.6);
    const auto c = StrategyConfig::defaults(StrategyKind::EWC, data::Mode::TaskOriented);
    EXPECT_EQ(c.ewc_lambda, 0.01);
    EXPECT_EQ(c.memory, 5u);
    EXPECT_EQ(c.alpha, 0.6);
}

TEST(Config, ParsesKindNamesLeniently) {
    EXPECT_EQ(parse_strategy_kind("tm_bnnm"), StrategyKind::TMBNNM);
    EXPECT_EQ(parse_strategy_kind("TM-BNNM"), StrategyKind::TMBNNM);
    EXPECT_EQ(parse_strategy_kind("agem"), StrategyKind::AGEM);
    EXPECT_EQ(parse_strategy_kind("text_mixup"), StrategyKind::TextMixup);
    for (auto k : {StrategyKind::Finetune, StrategyKind::Replay, StrategyKind::EWC, StrategyKind::AGEM,
                   StrategyKind::TextMixup, StrategyKind::TMBNNM, StrategyKind::Multi})
        EXPECT_EQ(parse_strategy_kind(to_string(k)), k);
    EXPECT_THROW(parse_strategy_kind("lamol"), InputError);
}

TEST(Config, ParsesRelevantKeys) {
    const auto c = parse_strategy_config(
        "bnnm_tok", {{"kind", "tm_bnnm"}, {"kappa", "0.25"}, {"bnnm_level", "token"}, {"alpha", "0.3"}, {"memory", "3"}},
        data::Mode::Chitchat);
    EXPECT_EQ(c.name, "bnnm_tok");
    EXPECT_EQ(c.kind, StrategyKind::TMBNNM);
    EXPECT_EQ(c.kappa, 0.25);
    EXPECT_EQ(c.bnnm_level, BnnmLevel::Token);
    EXPECT_EQ(c.alpha, 0.3);
    EXPECT_EQ(c.memory, 3u);
}

TEST(Config, RejectsIrrelevantOrInvalidKeys) {
    const auto mode = data::Mode::TaskOriented;
    EXPECT_THROW(parse_strategy_config("f", {{"kind", "finetune"}, {"kappa", "0.4"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("r", {{"kind", "replay"}, {"alpha", "0.4"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("m", {{"kind", "text_mixup"}, {"ewc_lambda", "1"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("x", {{"lr", "0.1"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("b", {{"kind", "tm_bnnm"}, {"kappa", "-1"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("b", {{"kind", "tm_bnnm"}, {"kappa", "abc"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("e", {{"kind", "ewc"}, {"epochs", "0"}}, mode), InputError);
    EXPECT_THROW(parse_strategy_config("r", {{"kind", "replay"}, {"augment", "wordnet"}}, mode), InputError);
}

TEST(Bnnm, SingleRowIsMinusOne) {
    Rng rng(1);
    EXPECT_NEAR(bnnm_value(random_tensor({1, 7}, rng)), -1.0, 1e-15);
}

TEST(Bnnm, IdenticalRowsGiveInverseSqrtB) {
    Rng rng(2);
    const Tensor row = random_tensor({1, 8}, rng);
    for (Index b : {2, 5, 16}) {
        Tensor z({b, 8});
        for (Index i = 0; i < b; ++i)
            z.matrix().row(i) = row.matrix().row(0);
        EXPECT_NEAR(bnnm_value(z), -1.0 / std::sqrt(static_cast<double>(b)), 1e-12);
    }
}

TEST(Bnnm, OrthonormalRowsGiveMinusOne) {
    Rng rng(3);
    for (Index b : {2, 4, 8}) {
        const nk::RowMatrix q = nk::svd(random_tensor({12, 12}, rng).matrix()).U;
        const Tensor z = Tensor::from_matrix(q.topRows(b) * 3.0);
        EXPECT_NEAR(bnnm_value(z), -1.0, 1e-12);
    }
}

TEST(Bnnm, RandomBatchesRespectBounds) {
    Rng rng(4);
    std::uniform_int_distribution<Index> dim(1, 24);
    for (int trial = 0; trial < 100; ++trial) {
        const Index b = dim(rng), h = dim(rng);
        const double loss = bnnm_value(random_tensor({b, h}, rng));
        const double bd = static_cast<double>(b);
        const double lower = -std::sqrt(static_cast<double>(std::min(b, h))) * std::sqrt(bd) / bd;
        EXPECT_GE(loss, lower - 1e-12) << b << "x" << h;
        EXPECT_LE(loss, -1.0 / std::sqrt(bd) + 1e-12) << b << "x" << h;
    }
}

TEST(Bnnm, EmptyBatchRejected) {
    nk::Tape tape(false);
    EXPECT_THROW(bnnm_loss(tape.constant(Tensor({0, 4}))), InputError);
}

TEST(Bnnm, SmallGradientStepIncreasesNuclearNorm) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor z = random_tensor({6, 5}, rng);
        nk::Tape tape;
        const nk::Var v = tape.leaf(z);
        tape.backward(bnnm_loss(v));
        Tensor stepped = z;
        stepped.flat() -= 1e-3 * v.grad().flat();
        EXPECT_GE(nk::nuclear_norm(nk::row_l2_normalize(stepped)), nk::nuclear_norm(nk::row_l2_normalize(z)) - 1e-12);
    }
}

TEST(Bnnm, RepresentationLevels) {
    model::TransformerLM m(tiny_model(), 1);
    const auto batch = model::TokenBatch::from_sequences({{1, 7, 8}, {1, 9}}, Tokenizer::kPad);
    nk::Tape tape(false);
    const auto out = m.infer(tape, batch);
    EXPECT_EQ(bnnm_representation(out, BnnmLevel::Sentence, batch.pad_mask).shape(), (nk::Shape{2, 16}));
    EXPECT_EQ(bnnm_representation(out, BnnmLevel::Token, batch.pad_mask).shape(), (nk::Shape{5, 16}));
}

TEST(TotalLoss, KappaZeroIsThetaLoss) {
    nk::Tape tape;
    const nk::Var a = tape.leaf(Tensor::scalar(1.25));
    const nk::Var b = tape.leaf(Tensor::scalar(-0.5));
    EXPECT_EQ(total_loss(a, b, 0.0).value().item(), 1.25);
    EXPECT_EQ(total_loss(a, b, 0.4).value().item(), 1.25 - 0.2);
}

TEST(TotalLoss, GradientIsLinearInKappa) {
    Rng rng(6);
    const Tensor x = random_tensor({4, 3}, rng);
    auto grad = [&](double kappa, int which) {
        nk::Tape tape;
        const nk::Var v = tape.leaf(x);
        const nk::Var lt = nk::sum(nk::mul(v, v));
        const nk::Var lb = bnnm_loss(v);
        tape.backward(which == 0 ? lt : which == 1 ? lb : total_loss(lt, lb, kappa));
        return v.grad();
    };
    const double kappa = 0.4;
    const Tensor gt = grad(0, 0), gb = grad(0, 1), gtot = grad(kappa, 2);
    EXPECT_LT((gtot.flat() - (gt.flat() + kappa * gb.flat())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ewc, HandComputedToy) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({2}, {1.1, 2.1}))};
    FisherAnchor anchor{{"w"}, {Tensor({2}, {1.0, 2.0})}, {Tensor({2}, {1.0, 2.0})}};
    nk::Tape tape;
    EXPECT_NEAR(ewc_penalty(tape, params, anchor, 0.01).value().item(), 1.5e-4, 1e-15);
}

TEST(Ewc, ZeroAtAnchorAndForZeroFisher) {
    Rng rng(7);
    std::vector<nk::Parameter> params{nk::Parameter("a", random_tensor({3, 2}, rng)),
                                      nk::Parameter("b", random_tensor({4}, rng))};
    FisherAnchor anchor;
    for (const auto& p : params) {
        anchor.names.push_back(p.name());
        anchor.theta.push_back(p.value());
        Tensor f = random_tensor(p.value().shape(), rng);
        f.flat() = f.flat().cwiseAbs();
        anchor.fisher.push_back(f);
    }
    {
        nk::Tape tape;
        EXPECT_EQ(ewc_penalty(tape, params, anchor, 0.01).value().item(), 0.0);
    }
    for (auto& p : params)
        p.value().flat().array() += 0.3;
    {
        nk::Tape tape;
        EXPECT_GT(ewc_penalty(tape, params, anchor, 0.01).value().item(), 0.0);
    }
    for (auto& f : anchor.fisher)
        f.fill(0.0);
    nk::Tape tape;
    EXPECT_EQ(ewc_penalty(tape, params, anchor, 0.01).value().item(), 0.0);
}

TEST(Ewc, GradientPullsTowardAnchor) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({2}, {1.5, -1.0}))};
    FisherAnchor anchor{{"w"}, {Tensor({2}, {1.0, 0.0})}, {Tensor({2}, {2.0, 0.5})}};
    nk::Tape tape;
    tape.backward(ewc_penalty(tape, params, anchor, 0.1));
    EXPECT_NEAR(params[0].grad()[0], 0.1 * 2.0 * 0.5, 1e-15);
    EXPECT_NEAR(params[0].grad()[1], 0.1 * 0.5 * -1.0, 1e-15);
}

TEST(Ewc, ShapeMismatchRejected) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({2}))};
    FisherAnchor anchor{{"w"}, {Tensor({3})}, {Tensor({3})}};
    nk::Tape tape;
    EXPECT_THROW(ewc_penalty(tape, params, anchor, 0.01), InputError);
}

TEST(Fisher, ZeroGradientGivesZero) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({3}, {1, 2, 3}))};
    const auto anchor = estimate_fisher(params, 5, [&](nk::Tape& tape, std::size_t) {
        return nk::scale(nk::sum(tape.parameter(params[0])), 0.0);
    });
    EXPECT_EQ(anchor.fisher[0].flat().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(anchor.theta[0], params[0].value());
}

TEST(Fisher, LogisticToyMatchesAnalyticFisher) {
    // Inputs uniform on the corners of [-1, 1]^2 and labels drawn from the
    // model, so the true Fisher is the corner average of p (1 - p).
    const double w0 = 0.5, w1 = -0.3;
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({2, 1}, {w0, w1}))};
    double analytic = 0.0;
    for (double a : {-1.0, 1.0})
        for (double b : {-1.0, 1.0}) {
            const double p = sigmoid(w0 * a + w1 * b);
            analytic += p * (1 - p) / 4;
        }
    Rng rng(8);
    std::bernoulli_distribution coin(0.5);
    const std::size_t n = 1000;
    std::vector<std::array<double, 2>> xs(n);
    std::vector<int> ys(n);
    double direct0 = 0.0, direct1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = {coin(rng) ? 1.0 : -1.0, coin(rng) ? 1.0 : -1.0};
        const double p = sigmoid(w0 * xs[i][0] + w1 * xs[i][1]);
        ys[i] = std::bernoulli_distribution(p)(rng) ? 1 : 0;
        direct0 += (p - ys[i]) * (p - ys[i]) * xs[i][0] * xs[i][0] / n;
        direct1 += (p - ys[i]) * (p - ys[i]) * xs[i][1] * xs[i][1] / n;
    }
    const auto anchor = estimate_fisher(params, n, [&](nk::Tape& tape, std::size_t i) {
        const nk::Var x = tape.constant(Tensor({1, 2}, {xs[i][0], xs[i][1]}));
        const nk::Var s = nk::matmul(x, tape.parameter(params[0]));
        const nk::Var logits = nk::matmul(s, tape.constant(Tensor({1, 2}, {0.0, 1.0})));
        const nk::SoftTarget target[] = {nk::SoftTarget::one_hot(ys[i])};
        return nk::soft_cross_entropy(logits, target, nk::Mask{1});
    });
    EXPECT_NEAR(anchor.fisher[0][0], direct0, 1e-12);
    EXPECT_NEAR(anchor.fisher[0][1], direct1, 1e-12);
    EXPECT_NEAR(anchor.fisher[0][0] / analytic, 1.0, 0.05);
    EXPECT_NEAR(anchor.fisher[0][1] / analytic, 1.0, 0.05);
}

TEST(Fisher, ModelEstimateIsNonnegativeAndAccumulates) {
    model::TransformerLM m(tiny_model(), 2);
    const auto dom = toy_domain("a", 0, 3);
    std::vector<const Example*> ptrs;
    for (const auto& e : dom)
        ptrs.push_back(&e);
    FisherAnchor a = estimate_fisher(m, ptrs);
    ASSERT_EQ(a.fisher.size(), m.parameters().size());
    double total = 0.0;
    for (const auto& f : a.fisher) {
        EXPECT_GE(f.flat().minCoeff(), 0.0);
        total += f.flat().sum();
    }
    EXPECT_GT(total, 0.0);
    const Tensor before = a.fisher[0];
    a.accumulate(a);
    EXPECT_EQ(a.fisher[0].flat(), 2.0 * before.flat());
    EXPECT_THROW(estimate_fisher(m, {}), InputError);
}

TEST(Agem, HandComputedCases) {
    Eigen::VectorXd g(2), ref(2);
    g << 1, 0;
    ref << -1, 1;
    const Eigen::VectorXd out = agem_project(g, ref);
    EXPECT_NEAR(out(0), 0.5, 1e-15);
    EXPECT_NEAR(out(1), 0.5, 1e-15);
    EXPECT_NEAR(out.dot(ref), 0.0, 1e-15);
    EXPECT_EQ(agem_project(ref, ref), ref);
    EXPECT_LT(agem_project(-ref, ref).norm(), 1e-15);
    EXPECT_EQ(agem_project(g, Eigen::VectorXd::Zero(2)), g);
    EXPECT_THROW(agem_project(g, Eigen::VectorXd::Zero(3)), InputError);
}

TEST(Agem, ProjectionNeverOpposesReference) {
    Rng rng(9);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd g(20), ref(20);
        for (int i = 0; i < 20; ++i) {
            g(i) = normal(rng);
            ref(i) = normal(rng);
        }
        const Eigen::VectorXd out = agem_project(g, ref);
        EXPECT_GE(out.dot(ref), -1e-10);
        if (g.dot(ref) >= 0) {
            EXPECT_EQ(out, g);
        }
    }
}

TEST(Agem, FlattenRoundTrip) {
    Rng rng(10);
    std::vector<nk::Parameter> params{nk::Parameter("a", Tensor({2, 3})), nk::Parameter("b", Tensor({4}))};
    params[0].grad() = random_tensor({2, 3}, rng);
    params[1].grad() = random_tensor({4}, rng);
    const Eigen::VectorXd flat = flatten_grads(params);
    ASSERT_EQ(flat.size(), 10);
    EXPECT_EQ(flat(6), params[1].grad()[0]);
    params[0].zero_grad();
    params[1].zero_grad();
    assign_grads(params, flat);
    EXPECT_EQ(flatten_grads(params), flat);
    EXPECT_THROW(assign_grads(params, Eigen::VectorXd::Zero(9)), InputError);
}

TEST(AdamW, ZeroGradientOnlyDecays) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({3}, {1.0, -2.0, 0.5}))};
    AdamWState state;
    adamw_step(params, state, 0.1, {});
    EXPECT_EQ(params[0].value()[0], 1.0 - 0.1 * 0.01 * 1.0);
    EXPECT_EQ(params[0].value()[1], -2.0 - 0.1 * 0.01 * -2.0);
}

TEST(AdamW, MatchesStraightLineReferenceOver100Steps) {
    Rng rng(11);
    std::normal_distribution<double> normal;
    const std::size_t n = 7;
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({7}))};
    std::vector<double> theta(n), grad(n);
    for (std::size_t i = 0; i < n; ++i)
        theta[i] = params[0].value()[static_cast<Index>(i)] = normal(rng);
    AdamWState state;
    clgen::testing::AdamWReference reference(3e-3);
    for (int t = 1; t <= 100; ++t) {
        for (std::size_t i = 0; i < n; ++i)
            grad[i] = params[0].grad()[static_cast<Index>(i)] = normal(rng);
        reference.step(theta, grad);
        adamw_step(params, state, 3e-3, {});
    }
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(params[0].value()[static_cast<Index>(i)], theta[i], 1e-12);
    EXPECT_EQ(state.step, 100u);
}

TEST(AdamW, SecondMomentFollowsRecurrence) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({1}, {0.0}))};
    params[0].grad()[0] = 2.0;
    AdamWState state;
    adamw_step(params, state, 1e-3, {});
    EXPECT_DOUBLE_EQ(state.v[0][0], 0.001 * 4.0);
    adamw_step(params, state, 1e-3, {});
    EXPECT_DOUBLE_EQ(state.v[0][0], 0.999 * 0.004 + 0.001 * 4.0);
    EXPECT_DOUBLE_EQ(state.m[0][0], 0.9 * 0.2 + 0.1 * 2.0);
}

TEST(AdamW, FirstStepMovesAgainstGradientByLr) {
    std::vector<nk::Parameter> params{nk::Parameter("w", Tensor({2}, {0.0, 0.0}))};
    params[0].grad() = Tensor({2}, {3.0, -0.01});
    AdamWState state;
    adamw_step(params, state, 0.05, {});
    EXPECT_NEAR(params[0].value()[0], -0.05, 1e-8);
    EXPECT_NEAR(params[0].value()[1], 0.05, 1e-5);
}

TEST(Clip, RescalesToMaxNorm) {
    std::vector<nk::Parameter> params{nk::Parameter("a", Tensor({2})), nk::Parameter("b", Tensor({1}))};
    params[0].grad() = Tensor({2}, {3.0, 0.0});
    params[1].grad() = Tensor({1}, {4.0});
    EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
    EXPECT_NEAR(flatten_grads(params).norm(), 1.0, 1e-15);
    EXPECT_NEAR(clip_grad_norm(params, 2.0), 1.0, 1e-15);
    EXPECT_NEAR(flatten_grads(params).norm(), 1.0, 1e-15);
}

TEST(Trainer, FinetuneNeverReadsReplay) {
    model::TransformerLM m(tiny_model(), 3);
    ContinualTrainer t(quick(StrategyKind::Finetune), {});
    t.train_domain(m, "a", toy_domain("a", 0, 8));
    t.train_domain(m, "b", toy_domain("b", 4, 8));
    EXPECT_EQ(t.replay().reads(), 0u);
    EXPECT_TRUE(t.replay().empty());
    EXPECT_EQ(t.log().size(), 4u);
}

TEST(Trainer, ReplayFamilyStoresHerdedExemplars) {
    for (auto kind : {StrategyKind::Replay, StrategyKind::AGEM, StrategyKind::TextMixup, StrategyKind::TMBNNM}) {
        model::TransformerLM m(tiny_model(), 3);
        ContinualTrainer t(quick(kind), {});
        t.train_domain(m, "a", toy_domain("a", 0, 8));
        EXPECT_EQ(t.replay().size(), 2u);
        EXPECT_EQ(t.replay().reads(), 0u);
        t.train_domain(m, "b", toy_domain("b", 4, 8));
        EXPECT_EQ(t.replay().size(), 4u);
        EXPECT_EQ(t.replay().reads(), 2u) << to_string(kind);
    }
}

TEST(Trainer, BnnmTermLoggedOnlyForTmBnnm) {
    for (auto level : {BnnmLevel::Sentence, BnnmLevel::Token}) {
        model::TransformerLM m(tiny_model(), 4);
        StrategyConfig c = quick(StrategyKind::TMBNNM);
        c.bnnm_level = level;
        ContinualTrainer t(c, {});
        t.train_domain(m, "a", toy_domain("a", 0, 8));
        t.train_domain(m, "b", toy_domain("b", 4, 8));
        for (const auto& r : t.log()) {
            ASSERT_TRUE(r.l_bnnm.has_value());
            EXPECT_LT(*r.l_bnnm, 0.0);
            EXPECT_GE(*r.l_bnnm, -1.0 - 1e-12);
        }
        // Second-domain steps carry the virtual mixup rows.
        EXPECT_EQ(t.log().back().rows, 4u + 2u + 2u);
    }
    model::TransformerLM m(tiny_model(), 4);
    ContinualTrainer t(quick(StrategyKind::TextMixup), {});
    t.train_domain(m, "a", toy_domain("a", 0, 8));
    EXPECT_FALSE(t.log().front().l_bnnm.has_value());
}

TEST(Trainer, EwcAnchorsAfterFirstDomain) {
    model::TransformerLM m(tiny_model(), 5);
    ContinualTrainer t(quick(StrategyKind::EWC), {});
    t.train_domain(m, "a", toy_domain("a", 0, 8));
    ASSERT_TRUE(t.anchor().has_value());
    EXPECT_FALSE(t.log().front().l_ewc.has_value());
    t.train_domain(m, "b", toy_domain("b", 4, 8));
    EXPECT_TRUE(t.log().back().l_ewc.has_value());
    EXPECT_TRUE(t.replay().empty());
}

TEST(Trainer, ReplayAugmentationsRun) {
    const Tokenizer tok = Tokenizer::build({"a b c d e f g h i j k l m n o p q"}, 1);
    for (auto aug : {ReplayAugment::Delete, ReplayAugment::Insert, ReplayAugment::Swap, ReplayAugment::Substitute,
                     ReplayAugment::Dropout}) {
        model::TransformerLM m(tiny_model(), 6);
        StrategyConfig c = quick(StrategyKind::Replay);
        c.augment = aug;
        TrainOptions o;
        o.tokenizer = &tok;
        ContinualTrainer t(c, o);
        t.train_domain(m, "a", toy_domain("a", 0, 8));
        t.train_domain(m, "b", toy_domain("b", 4, 8));
        const std::size_t expected = aug == ReplayAugment::Dropout ? 6u : 8u;
        EXPECT_EQ(t.log().back().rows, expected) << to_string(aug);
    }
    StrategyConfig c = quick(StrategyKind::Replay);
    c.augment = ReplayAugment::Delete;
    EXPECT_THROW(ContinualTrainer(c, {}), InputError);
}

TEST(Trainer, DeterministicGivenSeed) {
    for (auto kind : {StrategyKind::TMBNNM, StrategyKind::AGEM, StrategyKind::EWC}) {
        auto run = [&] {
            model::TransformerLM m(tiny_model(), 7);
            TrainOptions o;
            o.seed = 42;
            ContinualTrainer t(quick(kind), o);
            t.train_domain(m, "a", toy_domain("a", 0, 8));
            t.train_domain(m, "b", toy_domain("b", 4, 8));
            return values_of(m);
        };
        EXPECT_EQ(run(), run()) << to_string(kind);
    }
}

TEST(Trainer, TrainingReducesLoss) {
    model::TransformerLM m(tiny_model(), 8);
    StrategyConfig c = quick(StrategyKind::Finetune);
    c.epochs = 30;
    ContinualTrainer t(c, {});
    t.train_domain(m, "a", toy_domain("a", 0, 8));
    EXPECT_LT(t.log().back().l_theta, 0.5 * t.log().front().l_theta);
}

TEST(Trainer, RankTraceEveryKSteps) {
    model::TransformerLM m(tiny_model(), 9);
    TrainOptions o;
    o.rank_every = 2;
    ContinualTrainer t(quick(StrategyKind::Finetune), o);
    t.train_domain(m, "a", toy_domain("a", 0, 12));
    ASSERT_EQ(t.log().size(), 3u);
    EXPECT_TRUE(t.log()[0].rank.has_value());
    EXPECT_FALSE(t.log()[1].rank.has_value());
    EXPECT_TRUE(t.log()[2].rank.has_value());
    EXPECT_GE(*t.log()[0].rank, 1);
    EXPECT_LE(*t.log()[0].rank, 4);
}

TEST(Trainer, EmptyDomainRejected) {
    model::TransformerLM m(tiny_model(), 9);
    ContinualTrainer t(quick(StrategyKind::Finetune), {});
    EXPECT_THROW(t.train_domain(m, "a", {}), InputError);
}
