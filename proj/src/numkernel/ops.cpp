#include "clgen/numkernel/ops.hpp"

#include "clgen/common/error.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace clgen::nk {

namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
    if (a.shape() != b.shape())
        throw InputError(std::string(op) + ": shape mismatch");
}

Tape& tape_of(const char* op, const Var& a, const Var& b) {
    if (&a.tape() != &b.tape())
        throw Error(std::string(op) + ": operands live on different tapes");
    return a.tape();
}

Shape with_last(Shape s, Index last) {
    if (s.empty())
        s.push_back(last);
    else
        s.back() = last;
    return s;
}

Index active_count(const Mask& mask) {
    Index n = 0;
    for (auto m : mask)
        n += m ? 1 : 0;
    return n;
}

} // namespace

Var add(const Var& a, const Var& b) {
    require_same_shape("add", a, b);
    Tape& t = tape_of("add", a, b);
    Tensor out(a.shape());
    out.flat() = a.value().flat() + b.value().flat();
    return t.record("add", std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    Tape& t = tape_of("sub", a, b);
    Tensor out(a.shape());
    out.flat() = a.value().flat() - b.value().flat();
    return t.record("sub", std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
        t.accumulate(a, g);
        if (b.requires_grad())
            t.grad_buffer(b).flat() -= g.flat();
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape("mul", a, b);
    Tape& t = tape_of("mul", a, b);
    Tensor out(a.shape());
    out.flat() = a.value().flat().cwiseProduct(b.value().flat());
    return t.record("mul", std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat() += g.flat().cwiseProduct(b.value().flat());
        if (b.requires_grad())
            t.grad_buffer(b).flat() += g.flat().cwiseProduct(a.value().flat());
    });
}

Var scale(const Var& a, double s) {
    Tape& t = a.tape();
    Tensor out(a.shape());
    out.flat() = a.value().flat() * s;
    return t.record("scale", std::move(out), {a}, [&t, a, s](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat() += g.flat() * s;
    });
}

Var axpby(double alpha, const Var& a, double beta, const Var& b) {
    require_same_shape("axpby", a, b);
    Tape& t = tape_of("axpby", a, b);
    Tensor out(a.shape());
    out.flat() = alpha * a.value().flat() + beta * b.value().flat();
    return t.record("axpby", std::move(out), {a, b}, [&t, a, b, alpha, beta](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat() += alpha * g.flat();
        if (b.requires_grad())
            t.grad_buffer(b).flat() += beta * g.flat();
    });
}

Var add_row_vector(const Var& a, const Var& b) {
    if (b.value().size() != a.value().cols())
        throw InputError("add_row_vector: length mismatch");
    Tape& t = tape_of("add_row_vector", a, b);
    Tensor out(a.shape());
    out.matrix() = a.value().matrix().rowwise() + b.value().flat().transpose();
    return t.record("add_row_vector", std::move(out), {a, b}, [&t, a, b](const Tensor& g) {
        t.accumulate(a, g);
        if (b.requires_grad())
            t.grad_buffer(b).flat() += g.matrix().colwise().sum().transpose();
    });
}

Var mul_constant(const Var& a, const Tensor& c) {
    if (a.shape() != c.shape())
        throw InputError("mul_constant: shape mismatch");
    Tape& t = a.tape();
    Tensor out(a.shape());
    out.flat() = a.value().flat().cwiseProduct(c.flat());
    return t.record("mul_constant", std::move(out), {a}, [&t, a, c](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat() += g.flat().cwiseProduct(c.flat());
    });
}

Var sum(const Var& a) {
    Tape& t = a.tape();
    return t.record("sum", Tensor::scalar(a.value().flat().sum()), {a}, [&t, a](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat().array() += g.item();
    });
}

Var reshape(const Var& a, Shape shape) {
    Tape& t = a.tape();
    return t.record("reshape", a.value().reshaped(std::move(shape)), {a}, [&t, a](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).flat() += g.flat();
    });
}

Var matmul(const Var& a, const Var& w) {
    if (w.value().rank() != 2 || a.value().cols() != w.value().dim(0))
        throw InputError("matmul: inner dimension mismatch");
    Tape& t = tape_of("matmul", a, w);
    Tensor out(with_last(a.shape(), w.value().dim(1)));
    out.matrix().noalias() = a.value().matrix() * w.value().matrix();
    return t.record("matmul", std::move(out), {a, w}, [&t, a, w](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).matrix().noalias() += g.matrix() * w.value().matrix().transpose();
        if (w.requires_grad())
            t.grad_buffer(w).matrix().noalias() += a.value().matrix().transpose() * g.matrix();
    });
}

Var matmul_transposed(const Var& a, const Var& w) {
    if (w.value().rank() != 2 || a.value().cols() != w.value().dim(1))
        throw InputError("matmul_transposed: inner dimension mismatch");
    Tape& t = tape_of("matmul_transposed", a, w);
    Tensor out(with_last(a.shape(), w.value().dim(0)));
    out.matrix().noalias() = a.value().matrix() * w.value().matrix().transpose();
    return t.record("matmul_transposed", std::move(out), {a, w}, [&t, a, w](const Tensor& g) {
        if (a.requires_grad())
            t.grad_buffer(a).matrix().noalias() += g.matrix() * w.value().matrix();
        if (w.requires_grad())
            t.grad_buffer(w).matrix().noalias() += g.matrix().transpose() * a.value().matrix();
    });
}

Var softmax_rows(const Var& a) {
    Tape& t = a.tape();
    Tensor out(a.shape());
    auto x = a.value().matrix();
    auto y = out.matrix();
    for (Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - m).exp();
        y.row(r) /= y.row(r).sum();
    }
    auto saved = std::make_shared<Tensor>(out);
    return t.record("softmax_rows", std::move(out), {a}, [&t, a, saved](const Tensor& g) {
        if (!a.requires_grad())
            return;
        auto y = saved->matrix();
        auto dy = g.matrix();
        auto dx = t.grad_buffer(a).matrix();
        for (Index r = 0; r < y.rows(); ++r) {
            const double dot = y.row(r).dot(dy.row(r));
            dx.row(r).array() += y.row(r).array() * (dy.row(r).array() - dot);
        }
    });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Index C = x.value().cols();
    if (gamma.value().size() != C || beta.value().size() != C)
        throw InputError("layer_norm: parameter length mismatch");
    Tape& t = x.tape();
    const Index R = x.value().rows();
    auto xhat = std::make_shared<Tensor>(x.shape());
    auto inv_std = std::make_shared<Eigen::VectorXd>(R);
    Tensor out(x.shape());
    {
        auto xm = x.value().matrix();
        auto xh = xhat->matrix();
        auto y = out.matrix();
        const auto g = gamma.value().flat();
        const auto b = beta.value().flat();
        for (Index r = 0; r < R; ++r) {
            const double mu = xm.row(r).mean();
            const double var = (xm.row(r).array() - mu).square().mean();
            const double is = 1.0 / std::sqrt(var + eps);
            (*inv_std)(r) = is;
            xh.row(r) = (xm.row(r).array() - mu) * is;
            y.row(r) = xh.row(r).array() * g.transpose().array() + b.transpose().array();
        }
    }
    return t.record("layer_norm", std::move(out), {x, gamma, beta}, [&t, x, gamma, beta, xhat, inv_std, C](const Tensor& gr) {
        auto dy = gr.matrix();
        auto xh = xhat->matrix();
        if (gamma.requires_grad())
            t.grad_buffer(gamma).flat() += dy.cwiseProduct(xh).colwise().sum().transpose();
        if (beta.requires_grad())
            t.grad_buffer(beta).flat() += dy.colwise().sum().transpose();
        if (!x.requires_grad())
            return;
        auto dx = t.grad_buffer(x).matrix();
        const auto g = gamma.value().flat();
        Eigen::RowVectorXd dxh(C);
        for (Index r = 0; r < dy.rows(); ++r) {
            dxh = dy.row(r).cwiseProduct(g.transpose());
            const double m1 = dxh.mean();
            const double m2 = dxh.cwiseProduct(xh.row(r)).mean();
            dx.row(r).array() += (*inv_std)(r) * (dxh.array() - m1 - xh.row(r).array() * m2);
        }
    });
}

Var gelu(const Var& x) {
    constexpr double c = 0.7978845608028654; // sqrt(2/pi)
    constexpr double k = 0.044715;
    Tape& t = x.tape();
    Tensor out(x.shape());
    const auto xv = x.value().flat();
    auto y = out.flat();
    for (Index i = 0; i < xv.size(); ++i) {
        const double u = xv(i);
        y(i) = 0.5 * u * (1.0 + std::tanh(c * (u + k * u * u * u)));
    }
    return t.record("gelu", std::move(out), {x}, [&t, x](const Tensor& g) {
        if (!x.requires_grad())
            return;
        const auto xv = x.value().flat();
        auto dx = t.grad_buffer(x).flat();
        const auto dy = g.flat();
        for (Index i = 0; i < xv.size(); ++i) {
            const double u = xv(i);
            const double th = std::tanh(c * (u + k * u * u * u));
            const double d = 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * c * (1.0 + 3.0 * k * u * u);
            dx(i) += dy(i) * d;
        }
    });
}

Var embedding(const Var& table, std::span<const int> ids, Shape lead) {
    const Index V = table.value().dim(0);
    const Index H = table.value().cols();
    if (shape_size(lead) != static_cast<Index>(ids.size()))
        throw InputError("embedding: id count does not match shape");
    lead.push_back(H);
    Tensor out(std::move(lead));
    auto tm = table.value().matrix();
    auto om = out.matrix();
    std::vector<int> saved(ids.begin(), ids.end());
    for (std::size_t i = 0; i < saved.size(); ++i) {
        if (saved[i] < 0 || saved[i] >= V)
            throw InputError("embedding: token id out of range");
        om.row(static_cast<Index>(i)) = tm.row(saved[i]);
    }
    Tape& t = table.tape();
    return t.record("embedding", std::move(out), {table}, [&t, table, saved = std::move(saved)](const Tensor& g) {
        if (!table.requires_grad())
            return;
        auto dt = t.grad_buffer(table).matrix();
        auto gm = g.matrix();
        for (std::size_t i = 0; i < saved.size(); ++i)
            dt.row(saved[i]) += gm.row(static_cast<Index>(i));
    });
}

Var gather_rows(const Var& a, std::span<const Index> rows) {
    const Index C = a.value().cols();
    Tensor out({static_cast<Index>(rows.size()), C});
    auto am = a.value().matrix();
    auto om = out.matrix();
    std::vector<Index> saved(rows.begin(), rows.end());
    for (std::size_t i = 0; i < saved.size(); ++i) {
        if (saved[i] < 0 || saved[i] >= am.rows())
            throw InputError("gather_rows: row index out of range");
        om.row(static_cast<Index>(i)) = am.row(saved[i]);
    }
    Tape& t = a.tape();
    return t.record("gather_rows", std::move(out), {a}, [&t, a, saved = std::move(saved)](const Tensor& g) {
        if (!a.requires_grad())
            return;
        auto da = t.grad_buffer(a).matrix();
        auto gm = g.matrix();
        for (std::size_t i = 0; i < saved.size(); ++i)
            da.row(saved[i]) += gm.row(static_cast<Index>(i));
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty())
        throw InputError("concat_rows: no inputs");
    const Index C = parts.front().value().cols();
    Index rows = 0;
    for (const Var& p : parts) {
        if (p.value().cols() != C)
            throw InputError("concat_rows: column mismatch");
        if (&p.tape() != &parts.front().tape())
            throw Error("concat_rows: operands live on different tapes");
        rows += p.value().rows();
    }
    Tensor out({rows, C});
    Index offset = 0;
    for (const Var& p : parts) {
        out.matrix().middleRows(offset, p.value().rows()) = p.value().matrix();
        offset += p.value().rows();
    }
    Tape& t = parts.front().tape();
    return t.record("concat_rows", std::move(out), parts, [&t, parts](const Tensor& g) {
        Index offset = 0;
        for (const Var& p : parts) {
            const Index r = p.value().rows();
            if (p.requires_grad())
                t.grad_buffer(p).matrix() += g.matrix().middleRows(offset, r);
            offset += r;
        }
    });
}

namespace {

struct AttentionDims {
    Index B, T, H, heads, d;
};

AttentionDims attention_dims(const Var& q, const Var& k, const Var& v, Index heads) {
    if (q.value().rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
        throw InputError("causal_self_attention: q, k, v must share a [B, T, H] shape");
    const Index H = q.value().dim(2);
    if (heads < 1 || H % heads != 0)
        throw InputError("causal_self_attention: hidden size not divisible by heads");
    return {q.value().dim(0), q.value().dim(1), H, heads, H / heads};
}

} // namespace

Var causal_self_attention(const Var& q, const Var& k, const Var& v, Index num_heads) {
    const AttentionDims dm = attention_dims(q, k, v, num_heads);
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dm.d));
    Tape& t = q.tape();

    // probs[b * heads + h] is the T x T attention matrix (lower triangular)
    auto probs = std::make_shared<std::vector<RowMatrix>>(static_cast<std::size_t>(dm.B * dm.heads));
    Tensor out(q.shape());
    auto qm = q.value().matrix();
    auto km = k.value().matrix();
    auto vm = v.value().matrix();
    auto om = out.matrix();
    for (Index b = 0; b < dm.B; ++b) {
        for (Index h = 0; h < dm.heads; ++h) {
            auto qb = qm.block(b * dm.T, h * dm.d, dm.T, dm.d);
            auto kb = km.block(b * dm.T, h * dm.d, dm.T, dm.d);
            auto vb = vm.block(b * dm.T, h * dm.d, dm.T, dm.d);
            RowMatrix& p = (*probs)[static_cast<std::size_t>(b * dm.heads + h)];
            p.noalias() = (qb * kb.transpose()) * scale_factor;
            for (Index i = 0; i < dm.T; ++i) {
                const double m = p.row(i).head(i + 1).maxCoeff();
                p.row(i).head(i + 1) = (p.row(i).head(i + 1).array() - m).exp();
                p.row(i).head(i + 1) /= p.row(i).head(i + 1).sum();
                p.row(i).tail(dm.T - i - 1).setZero();
            }
            om.block(b * dm.T, h * dm.d, dm.T, dm.d).noalias() = p * vb;
        }
    }
    return t.record("causal_self_attention", std::move(out), {q, k, v}, [&t, q, k, v, probs, dm, scale_factor](const Tensor& g) {
        auto gm = g.matrix();
        auto qm = q.value().matrix();
        auto km = k.value().matrix();
        auto vm = v.value().matrix();
        const bool need_q = q.requires_grad(), need_k = k.requires_grad(), need_v = v.requires_grad();
        RowMatrix dp, ds;
        for (Index b = 0; b < dm.B; ++b) {
            for (Index h = 0; h < dm.heads; ++h) {
                const RowMatrix& p = (*probs)[static_cast<std::size_t>(b * dm.heads + h)];
                auto gb = gm.block(b * dm.T, h * dm.d, dm.T, dm.d);
                auto qb = qm.block(b * dm.T, h * dm.d, dm.T, dm.d);
                auto kb = km.block(b * dm.T, h * dm.d, dm.T, dm.d);
                auto vb = vm.block(b * dm.T, h * dm.d, dm.T, dm.d);
                if (need_v)
                    t.grad_buffer(v).matrix().block(b * dm.T, h * dm.d, dm.T, dm.d).noalias() += p.transpose() * gb;
                if (!need_q && !need_k)
                    continue;
                dp.noalias() = gb * vb.transpose();
                ds.resize(dm.T, dm.T);
                for (Index i = 0; i < dm.T; ++i) {
                    const double dot = p.row(i).dot(dp.row(i));
                    ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
                }
                ds *= scale_factor;
                if (need_q)
                    t.grad_buffer(q).matrix().block(b * dm.T, h * dm.d, dm.T, dm.d).noalias() += ds * kb;
                if (need_k)
                    t.grad_buffer(k).matrix().block(b * dm.T, h * dm.d, dm.T, dm.d).noalias() += ds.transpose() * qb;
            }
        }
    });
}

Var masked_mean(const Var& x, const Mask& mask) {
    if (x.value().rank() != 3)
        throw InputError("masked_mean: expected [B, T, H]");
    const Index B = x.value().dim(0), T = x.value().dim(1), H = x.value().dim(2);
    if (static_cast<Index>(mask.size()) != B * T)
        throw InputError("masked_mean: mask size mismatch");
    Tensor out({B, H});
    auto xm = x.value().matrix();
    auto counts = std::make_shared<std::vector<double>>(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) {
        double n = 0;
        for (Index s = 0; s < T; ++s) {
            if (mask[static_cast<std::size_t>(b * T + s)]) {
                out.matrix().row(b) += xm.row(b * T + s);
                n += 1;
            }
        }
        if (n == 0)
            throw InputError("masked_mean: row " + std::to_string(b) + " has no active position");
        out.matrix().row(b) /= n;
        (*counts)[static_cast<std::size_t>(b)] = n;
    }
    Tape& t = x.tape();
    return t.record("masked_mean", std::move(out), {x}, [&t, x, mask, counts, B, T](const Tensor& g) {
        if (!x.requires_grad())
            return;
        auto dx = t.grad_buffer(x).matrix();
        for (Index b = 0; b < B; ++b)
            for (Index s = 0; s < T; ++s)
                if (mask[static_cast<std::size_t>(b * T + s)])
                    dx.row(b * T + s) += g.matrix().row(b) / (*counts)[static_cast<std::size_t>(b)];
    });
}

Var attention_pool(const Var& query, const Var& keys, const Var& values, const Mask& mask) {
    if (keys.value().rank() != 3 || keys.shape() != values.shape())
        throw InputError("attention_pool: keys and values must be [B, T, H]");
    const Index B = keys.value().dim(0), T = keys.value().dim(1), H = keys.value().dim(2);
    if (query.value().rows() != B || query.value().cols() != H)
        throw InputError("attention_pool: query must be [B, H]");
    if (static_cast<Index>(mask.size()) != B * T)
        throw InputError("attention_pool: mask size mismatch");
    const double sc = 1.0 / std::sqrt(static_cast<double>(H));

    auto weights = std::make_shared<RowMatrix>(RowMatrix::Zero(B, T));
    Tensor out({B, H});
    auto qm = query.value().matrix();
    auto km = keys.value().matrix();
    auto vm = values.value().matrix();
    for (Index b = 0; b < B; ++b) {
        double m = -std::numeric_limits<double>::infinity();
        for (Index s = 0; s < T; ++s)
            if (mask[static_cast<std::size_t>(b * T + s)]) {
                (*weights)(b, s) = qm.row(b).dot(km.row(b * T + s)) * sc;
                m = std::max(m, (*weights)(b, s));
            }
        if (!std::isfinite(m))
            throw InputError("attention_pool: row " + std::to_string(b) + " has no active position");
        double z = 0;
        for (Index s = 0; s < T; ++s) {
            double& w = (*weights)(b, s);
            w = mask[static_cast<std::size_t>(b * T + s)] ? std::exp(w - m) : 0.0;
            z += w;
        }
        weights->row(b) /= z;
        out.matrix().row(b) = weights->row(b) * vm.middleRows(b * T, T);
    }
    Tape& t = query.tape();
    return t.record("attention_pool", std::move(out), {query, keys, values}, [&t, query, keys, values, weights, B, T, sc](const Tensor& g) {
        auto gm = g.matrix();
        auto qm = query.value().matrix();
        auto km = keys.value().matrix();
        auto vm = values.value().matrix();
        for (Index b = 0; b < B; ++b) {
            const auto a = weights->row(b);
            if (values.requires_grad())
                t.grad_buffer(values).matrix().middleRows(b * T, T).noalias() += a.transpose() * gm.row(b);
            Eigen::RowVectorXd da = gm.row(b) * vm.middleRows(b * T, T).transpose();
            const double dot = a.dot(da);
            Eigen::RowVectorXd ds = (a.array() * (da.array() - dot)).matrix() * sc;
            if (query.requires_grad())
                t.grad_buffer(query).matrix().row(b) += ds * km.middleRows(b * T, T);
            if (keys.requires_grad())
                t.grad_buffer(keys).matrix().middleRows(b * T, T).noalias() += ds.transpose() * qm.row(b);
        }
    });
}

Var row_l2_normalize(const Var& z, NormalizeStats* stats) {
    const Index R = z.value().rows();
    auto norms = std::make_shared<Eigen::VectorXd>(R);
    auto guarded = std::make_shared<Eigen::VectorXd>(R);
    Tensor out(z.shape());
    auto zm = z.value().matrix();
    for (Index r = 0; r < R; ++r) {
        const double n = zm.row(r).norm();
        double denom = n;
        if (n < kRowNormEpsilon) {
            denom = n + kRowNormEpsilon;
            if (stats)
                ++stats->guarded_rows;
        }
        (*norms)(r) = n;
        (*guarded)(r) = denom;
        out.matrix().row(r) = zm.row(r) / denom;
    }
    Tape& t = z.tape();
    return t.record("row_l2_normalize", std::move(out), {z}, [&t, z, norms, guarded](const Tensor& g) {
        if (!z.requires_grad())
            return;
        auto zm = z.value().matrix();
        auto gm = g.matrix();
        auto dz = t.grad_buffer(z).matrix();
        for (Index r = 0; r < zm.rows(); ++r) {
            const double n = (*norms)(r), d = (*guarded)(r);
            dz.row(r) += gm.row(r) / d;
            if (n > 0)
                dz.row(r) -= zm.row(r) * (zm.row(r).dot(gm.row(r)) / (d * d * n));
        }
    });
}

Var nuclear_norm(const Var& z) {
    auto res = svd(z.value().matrix());
    auto direction = std::make_shared<Tensor>(z.shape());
    if (!z.value().matrix().isZero(0))
        direction->matrix() = res.U * res.V.transpose();
    Tape& t = z.tape();
    return t.record("nuclear_norm", Tensor::scalar(res.S.sum()), {z}, [&t, z, direction](const Tensor& g) {
        if (z.requires_grad())
            t.grad_buffer(z).flat() += g.item() * direction->flat();
    });
}

Var soft_cross_entropy(const Var& logits, std::span<const SoftTarget> targets, const Mask& mask) {
    const Index R = logits.value().rows(), V = logits.value().cols();
    if (static_cast<Index>(targets.size()) != R || static_cast<Index>(mask.size()) != R)
        throw InputError("soft_cross_entropy: targets/mask length mismatch");
    const Index active = active_count(mask);
    if (active == 0)
        throw InputError("soft_cross_entropy: every position is masked");
    auto probs = std::make_shared<RowMatrix>(R, V);
    auto lm = logits.value().matrix();
    double total = 0;
    for (Index r = 0; r < R; ++r) {
        const double m = lm.row(r).maxCoeff();
        probs->row(r) = (lm.row(r).array() - m).exp();
        const double z = probs->row(r).sum();
        probs->row(r) /= z;
        if (!mask[static_cast<std::size_t>(r)])
            continue;
        const SoftTarget& tg = targets[static_cast<std::size_t>(r)];
        if (tg.first < 0 || tg.first >= V || tg.second < 0 || tg.second >= V)
            throw InputError("soft_cross_entropy: target id out of range");
        const double lse = m + std::log(z);
        total -= tg.weight_first * (lm(r, tg.first) - lse);
        total -= (1.0 - tg.weight_first) * (lm(r, tg.second) - lse);
    }
    const double inv = 1.0 / static_cast<double>(active);
    std::vector<SoftTarget> saved(targets.begin(), targets.end());
    Tape& t = logits.tape();
    return t.record("soft_cross_entropy", Tensor::scalar(total * inv), {logits},
                    [&t, logits, probs, saved = std::move(saved), mask, inv](const Tensor& g) {
                        if (!logits.requires_grad())
                            return;
                        auto dl = t.grad_buffer(logits).matrix();
                        const double s = g.item() * inv;
                        for (Index r = 0; r < dl.rows(); ++r) {
                            if (!mask[static_cast<std::size_t>(r)])
                                continue;
                            const SoftTarget& tg = saved[static_cast<std::size_t>(r)];
                            dl.row(r) += s * probs->row(r);
                            dl(r, tg.first) -= s * tg.weight_first;
                            dl(r, tg.second) -= s * (1.0 - tg.weight_first);
                        }
                    });
}

Var weighted_squared_distance(const Var& x, const Tensor& anchor, const Tensor& weights) {
    if (x.shape() != anchor.shape() || x.shape() != weights.shape())
        throw InputError("weighted_squared_distance: shape mismatch");
    const Eigen::VectorXd diff = x.value().flat() - anchor.flat();
    const double value = weights.flat().cwiseProduct(diff.cwiseProduct(diff)).sum();
    Tape& t = x.tape();
    return t.record("weighted_squared_distance", Tensor::scalar(value), {x}, [&t, x, weights, diff](const Tensor& g) {
        if (x.requires_grad())
            t.grad_buffer(x).flat() += 2.0 * g.item() * weights.flat().cwiseProduct(diff);
    });
}

} // namespace clgen::nk
