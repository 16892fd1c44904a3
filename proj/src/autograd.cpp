#include "hydra/autograd.hpp"

#include <cmath>
#include <stdexcept>

namespace hydra {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got rank " +
                                    std::to_string(t.rank()) + " with shape " +
                                    shape_str(t.shape));
    }
}

}  // namespace

double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluK * (x + kGeluC * x * x * x)));
}

Value Tape::push(Tensor data) {
    Slot s;
    s.data = std::move(data);
    slots_.push_back(std::move(s));
    return Value{static_cast<int>(slots_.size()) - 1};
}

Tensor& Tape::grad_of(int id) {
    Slot& s = slots_[static_cast<std::size_t>(id)];
    if (s.grad.numel() == 0) s.grad = Tensor::zeros(s.data.shape);
    return s.grad;
}

void Tape::add_grad(int id, const Tensor& g) {
    Tensor& grad = grad_of(id);
    for (std::size_t i = 0; i < g.data.size(); ++i) grad.data[i] += g.data[i];
    slots_[static_cast<std::size_t>(id)].has_grad = true;
}

void Tape::add_grad_at(int id, std::size_t flat_index, double g) {
    grad_of(id).data[flat_index] += g;
    slots_[static_cast<std::size_t>(id)].has_grad = true;
}

Value Tape::leaf(Tensor t) { return push(std::move(t)); }

Value Tape::param(Parameter& p) {
    Value v = push(p.value);
    if (record_) slots_[static_cast<std::size_t>(v.id)].bound = &p;
    return v;
}

Value Tape::detach(Value a) { return push(data_of(a.id)); }

double Tape::scalar(Value v) const {
    const Tensor& t = tensor(v);
    if (t.numel() != 1) {
        throw std::invalid_argument("scalar: value has shape " + shape_str(t.shape));
    }
    return t.data[0];
}

Value Tape::matmul(Value a, Value b) {
    const Tensor& ta = data_of(a.id);
    const Tensor& tb = data_of(b.id);
    require_rank2(ta, "matmul");
    require_rank2(tb, "matmul");
    if (ta.dim(1) != tb.dim(0)) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(ta.shape) +
                                    " vs " + shape_str(tb.shape));
    }
    const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = ta.at(i, p);
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j) out.at(i, j) += av * tb.at(p, j);
        }
    }
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, b, v, m, k, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            const Tensor& av = t.data_of(a.id);
            const Tensor& bv = t.data_of(b.id);
            // dA = dC * B^T
            Tensor da({m, k});
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double d = dc.at(i, j);
                    if (d == 0.0) continue;
                    for (int p = 0; p < k; ++p) da.at(i, p) += d * bv.at(p, j);
                }
            t.add_grad(a.id, da);
            // dB = A^T * dC
            Tensor db({k, n});
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    const double av_ip = av.at(i, p);
                    if (av_ip == 0.0) continue;
                    for (int j = 0; j < n; ++j) db.at(p, j) += av_ip * dc.at(i, j);
                }
            t.add_grad(b.id, db);
        };
    }
    return v;
}

Value Tape::transpose(Value a) {
    const Tensor& ta = data_of(a.id);
    require_rank2(ta, "transpose");
    const int m = ta.dim(0), n = ta.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v, m, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            Tensor da({m, n});
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) da.at(i, j) = dc.at(j, i);
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::add(Value a, Value b) {
    const Tensor& ta = data_of(a.id);
    const Tensor& tb = data_of(b.id);
    if (!ta.same_shape(tb)) {
        throw std::invalid_argument("add: shape mismatch, " + shape_str(ta.shape) + " vs " +
                                    shape_str(tb.shape));
    }
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, b, v](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            t.add_grad(a.id, dc);
            t.add_grad(b.id, dc);
        };
    }
    return v;
}

Value Tape::add_row_bias(Value a, Value bias) {
    const Tensor& ta = data_of(a.id);
    const Tensor& tb = data_of(bias.id);
    require_rank2(ta, "add_row_bias");
    if (tb.rank() != 1 || tb.dim(0) != ta.dim(1)) {
        throw std::invalid_argument("add_row_bias: bias shape " + shape_str(tb.shape) +
                                    " does not match columns of " + shape_str(ta.shape));
    }
    const int m = ta.dim(0), n = ta.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = ta.at(i, j) + tb.at(j);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, bias, v, m, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            t.add_grad(a.id, dc);
            Tensor db({n});
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) db.at(j) += dc.at(i, j);
            t.add_grad(bias.id, db);
        };
    }
    return v;
}

Value Tape::add_const(Value a, const Tensor& c) {
    const Tensor& ta = data_of(a.id);
    if (!ta.same_shape(c)) {
        throw std::invalid_argument("add_const: shape mismatch, " + shape_str(ta.shape) + " vs " +
                                    shape_str(c.shape));
    }
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] + c.data[i];
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v](Tape& t) {
            t.add_grad(a.id, t.grad_of(v.id));
        };
    }
    return v;
}

Value Tape::scale(Value a, double c) {
    const Tensor& ta = data_of(a.id);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] * c;
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v, c](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            Tensor da(dc.shape);
            for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] = dc.data[i] * c;
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::softmax_rows(Value a) {
    const Tensor& ta = data_of(a.id);
    require_rank2(ta, "softmax_rows");
    const int m = ta.dim(0), n = ta.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        double mx = ta.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, ta.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(ta.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
    }
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v, m, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            const Tensor& s = t.data_of(v.id);
            Tensor da({m, n});
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += dc.at(i, j) * s.at(i, j);
                for (int j = 0; j < n; ++j) da.at(i, j) = s.at(i, j) * (dc.at(i, j) - dot);
            }
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::layer_norm(Value a, Value gain, Value bias) {
    const Tensor& ta = data_of(a.id);
    const Tensor& tg = data_of(gain.id);
    const Tensor& tb = data_of(bias.id);
    require_rank2(ta, "layer_norm");
    const int m = ta.dim(0), n = ta.dim(1);
    if (n < 2) {
        throw std::invalid_argument("layer_norm: last dimension must be >= 2, got shape " +
                                    shape_str(ta.shape));
    }
    if (tg.rank() != 1 || tg.dim(0) != n || tb.rank() != 1 || tb.dim(0) != n) {
        throw std::invalid_argument("layer_norm: gain/bias must have shape [" +
                                    std::to_string(n) + "]");
    }
    Tensor out({m, n});
    Tensor xhat({m, n});
    std::vector<double> inv_std(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += ta.at(i, j);
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = ta.at(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[static_cast<std::size_t>(i)] = is;
        for (int j = 0; j < n; ++j) {
            const double xh = (ta.at(i, j) - mean) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = tg.at(j) * xh + tb.at(j);
        }
    }
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, gain, bias, v, m, n, xhat,
                                                       inv_std](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            const Tensor& tg2 = t.data_of(gain.id);
            Tensor da({m, n});
            Tensor dg({n});
            Tensor db({n});
            for (int i = 0; i < m; ++i) {
                double mean_gdy = 0.0, mean_gdy_xhat = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double gdy = tg2.at(j) * dc.at(i, j);
                    mean_gdy += gdy;
                    mean_gdy_xhat += gdy * xhat.at(i, j);
                }
                mean_gdy /= n;
                mean_gdy_xhat /= n;
                for (int j = 0; j < n; ++j) {
                    const double gdy = tg2.at(j) * dc.at(i, j);
                    da.at(i, j) = (gdy - mean_gdy - xhat.at(i, j) * mean_gdy_xhat) *
                                  inv_std[static_cast<std::size_t>(i)];
                    dg.at(j) += dc.at(i, j) * xhat.at(i, j);
                    db.at(j) += dc.at(i, j);
                }
            }
            t.add_grad(a.id, da);
            t.add_grad(gain.id, dg);
            t.add_grad(bias.id, db);
        };
    }
    return v;
}

Value Tape::gelu(Value a) {
    const Tensor& ta = data_of(a.id);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = gelu_scalar(ta.data[i]);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            const Tensor& x = t.data_of(a.id);
            Tensor da(x.shape);
            for (std::size_t i = 0; i < da.data.size(); ++i) {
                const double xi = x.data[i];
                const double u = kGeluK * (xi + kGeluC * xi * xi * xi);
                const double th = std::tanh(u);
                const double sech2 = 1.0 - th * th;
                const double du = kGeluK * (1.0 + 3.0 * kGeluC * xi * xi);
                da.data[i] = dc.data[i] * (0.5 * (1.0 + th) + 0.5 * xi * sech2 * du);
            }
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::embedding_rows(Value table, const std::vector<int>& ids) {
    const Tensor& tt = data_of(table.id);
    require_rank2(tt, "embedding_rows");
    const int vocab = tt.dim(0), d = tt.dim(1);
    const int s = static_cast<int>(ids.size());
    if (s == 0) throw std::invalid_argument("embedding_rows: empty id list");
    for (int i : ids) {
        if (i < 0 || i >= vocab) {
            throw std::out_of_range("embedding_rows: id " + std::to_string(i) +
                                    " outside table of " + std::to_string(vocab) + " rows");
        }
    }
    Tensor out({s, d});
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < d; ++j) out.at(i, j) = tt.at(ids[static_cast<std::size_t>(i)], j);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [table, v, ids, d](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            const Tensor& tab = t.data_of(table.id);
            Tensor dt(tab.shape);
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (int j = 0; j < d; ++j)
                    dt.at(ids[i], j) += dc.at(static_cast<int>(i), j);
            t.add_grad(table.id, dt);
        };
    }
    return v;
}

Value Tape::slice_cols(Value a, int offset, int width) {
    const Tensor& ta = data_of(a.id);
    require_rank2(ta, "slice_cols");
    const int m = ta.dim(0), n = ta.dim(1);
    if (offset < 0 || width <= 0 || offset + width > n) {
        throw std::invalid_argument("slice_cols: range [" + std::to_string(offset) + ", " +
                                    std::to_string(offset + width) + ") outside " +
                                    shape_str(ta.shape));
    }
    Tensor out({m, width});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < width; ++j) out.at(i, j) = ta.at(i, offset + j);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v, offset, width, m, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            Tensor da({m, n});
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < width; ++j) da.at(i, offset + j) = dc.at(i, j);
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::slice_rows(Value a, int offset, int height) {
    const Tensor& ta = data_of(a.id);
    require_rank2(ta, "slice_rows");
    const int m = ta.dim(0), n = ta.dim(1);
    if (offset < 0 || height <= 0 || offset + height > m) {
        throw std::invalid_argument("slice_rows: range [" + std::to_string(offset) + ", " +
                                    std::to_string(offset + height) + ") outside " +
                                    shape_str(ta.shape));
    }
    Tensor out({height, n});
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = ta.at(offset + i, j);
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [a, v, offset, height, m, n](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            Tensor da({m, n});
            for (int i = 0; i < height; ++i)
                for (int j = 0; j < n; ++j) da.at(offset + i, j) = dc.at(i, j);
            t.add_grad(a.id, da);
        };
    }
    return v;
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const int m = data_of(parts[0].id).dim(0);
    int total = 0;
    for (Value p : parts) {
        const Tensor& tp = data_of(p.id);
        require_rank2(tp, "concat_cols");
        if (tp.dim(0) != m) {
            throw std::invalid_argument("concat_cols: row mismatch, " + shape_str(tp.shape));
        }
        total += tp.dim(1);
    }
    Tensor out({m, total});
    int off = 0;
    for (Value p : parts) {
        const Tensor& tp = data_of(p.id);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < tp.dim(1); ++j) out.at(i, off + j) = tp.at(i, j);
        off += tp.dim(1);
    }
    Value v = push(std::move(out));
    if (record_) {
        std::vector<Value> parts_copy = parts;
        slots_[static_cast<std::size_t>(v.id)].back = [parts_copy, v, m](Tape& t) {
            const Tensor& dc = t.grad_of(v.id);
            int off2 = 0;
            for (Value p : parts_copy) {
                const int w = t.data_of(p.id).dim(1);
                Tensor dp({m, w});
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < w; ++j) dp.at(i, j) = dc.at(i, off2 + j);
                t.add_grad(p.id, dp);
                off2 += w;
            }
        };
    }
    return v;
}

Value Tape::mse_masked(Value pred, const Tensor& target, const Tensor& mask) {
    const Tensor& tp = data_of(pred.id);
    if (!tp.same_shape(target) || !tp.same_shape(mask)) {
        throw std::invalid_argument("mse_masked: shape mismatch, pred " + shape_str(tp.shape) +
                                    ", target " + shape_str(target.shape) + ", mask " +
                                    shape_str(mask.shape));
    }
    double mask_sum = 0.0;
    for (double mv : mask.data) {
        if (mv != 0.0 && mv != 1.0) {
            throw std::invalid_argument("mse_masked: mask entries must be 0 or 1");
        }
        mask_sum += mv;
    }
    if (mask_sum == 0.0) {
        throw std::invalid_argument("mse_masked: mask selects no cells (empty loss)");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < tp.data.size(); ++i) {
        const double d = tp.data[i] - target.data[i];
        acc += mask.data[i] * d * d;
    }
    Tensor out({1, 1});
    out.data[0] = acc / mask_sum;
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [pred, v, target, mask, mask_sum](Tape& t) {
            const double dl = t.grad_of(v.id).data[0];
            const Tensor& tpv = t.data_of(pred.id);
            Tensor dp(tpv.shape);
            for (std::size_t i = 0; i < dp.data.size(); ++i) {
                dp.data[i] = dl * 2.0 * mask.data[i] * (tpv.data[i] - target.data[i]) / mask_sum;
            }
            t.add_grad(pred.id, dp);
        };
    }
    return v;
}

Value Tape::cross_entropy(Value logits, const std::vector<int>& labels) {
    const Tensor& tl = data_of(logits.id);
    require_rank2(tl, "cross_entropy");
    const int b = tl.dim(0), c = tl.dim(1);
    if (static_cast<int>(labels.size()) != b) {
        throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(b) + " rows");
    }
    for (int lab : labels) {
        if (lab < 0 || lab >= c) {
            throw std::out_of_range("cross_entropy: label " + std::to_string(lab) +
                                    " outside [0, " + std::to_string(c) + ")");
        }
    }
    // Stable log-softmax per row.
    Tensor probs({b, c});
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        double mx = tl.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, tl.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(tl.at(i, j) - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < c; ++j) probs.at(i, j) = std::exp(tl.at(i, j) - lse);
        loss -= tl.at(i, labels[static_cast<std::size_t>(i)]) - lse;
    }
    Tensor out({1, 1});
    out.data[0] = loss / b;
    Value v = push(std::move(out));
    if (record_) {
        slots_[static_cast<std::size_t>(v.id)].back = [logits, v, labels, probs, b, c](Tape& t) {
            const double dl = t.grad_of(v.id).data[0];
            Tensor dlog({b, c});
            for (int i = 0; i < b; ++i) {
                for (int j = 0; j < c; ++j) {
                    const double onehot = (labels[static_cast<std::size_t>(i)] == j) ? 1.0 : 0.0;
                    dlog.at(i, j) = dl * (probs.at(i, j) - onehot) / b;
                }
            }
            t.add_grad(logits.id, dlog);
        };
    }
    return v;
}

Value Tape::mean(const std::vector<Value>& scalars) {
    if (scalars.empty()) throw std::invalid_argument("mean: no inputs");
    double acc = 0.0;
    for (Value s : scalars) {
        const Tensor& ts = data_of(s.id);
        if (ts.numel() != 1) {
            throw std::invalid_argument("mean: non-scalar input of shape " + shape_str(ts.shape));
        }
        acc += ts.data[0];
    }
    Tensor out({1, 1});
    out.data[0] = acc / static_cast<double>(scalars.size());
    Value v = push(std::move(out));
    if (record_) {
        std::vector<Value> copy = scalars;
        slots_[static_cast<std::size_t>(v.id)].back = [copy, v](Tape& t) {
            const double dl = t.grad_of(v.id).data[0] / static_cast<double>(copy.size());
            for (Value s : copy) t.add_grad_at(s.id, 0, dl);
        };
    }
    return v;
}

void Tape::backward(Value loss) {
    if (!record_) {
        throw std::logic_error("backward: tape was created with record=false");
    }
    const Tensor& lt = tensor(loss);
    if (lt.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(lt.shape));
    }
    add_grad_at(loss.id, 0, 1.0);
    for (int id = static_cast<int>(slots_.size()) - 1; id >= 0; --id) {
        Slot& s = slots_[static_cast<std::size_t>(id)];
        if (!s.has_grad) continue;
        if (s.back) s.back(*this);
    }
    for (Slot& s : slots_) {
        if (s.bound != nullptr && s.has_grad) {
            for (std::size_t i = 0; i < s.grad.data.size(); ++i) {
                s.bound->grad.data[i] += s.grad.data[i];
            }
        }
    }
}

}  // namespace hydra
