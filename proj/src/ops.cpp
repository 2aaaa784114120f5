#include "forge/ops.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "forge/kernels.hpp"

namespace forge {

namespace {

using kernels::gemm_acc;
using kernels::gemm_at_acc;
using kernels::gemm_bt_acc;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                                " and " + shape_str(b));
}

bool want_record(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

Tensor result_like(Shape shape, bool requires_grad) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    t.mark_result();
    return t;
}

void transpose_into(const double* src, double* dst, int rows, int cols) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) dst[(std::size_t)j * rows + i] = src[(std::size_t)i * cols + j];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
    if (a.rank() != 2 || b.rank() != 2) shape_error("matmul", a.shape(), b.shape());
    const int m = (int)(ta ? a.dim(1) : a.dim(0));
    const int k = (int)(ta ? a.dim(0) : a.dim(1));
    const int kb = (int)(tb ? b.dim(1) : b.dim(0));
    const int n = (int)(tb ? b.dim(0) : b.dim(1));
    if (k != kb) shape_error("matmul", a.shape(), b.shape());

    const bool rec = want_record({&a, &b});
    Tensor out = result_like({m, n}, a.requires_grad() || b.requires_grad());

    if (!ta && !tb) {
        gemm_acc(a.data(), b.data(), out.data(), m, k, n);
    } else if (ta && !tb) {
        gemm_at_acc(a.data(), b.data(), out.data(), m, k, n);
    } else if (!ta && tb) {
        gemm_bt_acc(a.data(), b.data(), out.data(), m, k, n);
    } else {
        // A^T * B^T == (B*A)^T
        std::vector<double> t((std::size_t)n * m, 0.0);
        gemm_acc(b.data(), a.data(), t.data(), n, kb, m);
        transpose_into(t.data(), out.data(), n, m);
    }

    if (rec) {
        Tape::active()->record(out, [a, b, ta, tb, m, k, n](const double* dout, AdjointStore& adj) {
            if (a.requires_grad()) {
                std::vector<double>& da = adj.touch(a);
                if (!ta) {
                    // dA[m,k] += dC * op(B)^T
                    if (!tb) gemm_bt_acc(dout, b.data(), da.data(), m, n, k);
                    else gemm_acc(dout, b.data(), da.data(), m, n, k);
                } else {
                    // stored dA[k,m] += op(B) * dC^T
                    if (!tb) {
                        std::vector<double> t((std::size_t)k * m, 0.0);
                        gemm_bt_acc(dout, b.data(), t.data(), m, n, k);  // logical dA
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < k; ++j) da[(std::size_t)j * m + i] += t[(std::size_t)i * k + j];
                    } else {
                        std::vector<double> t((std::size_t)m * k, 0.0);
                        gemm_acc(dout, b.data(), t.data(), m, n, k);
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < k; ++j) da[(std::size_t)j * m + i] += t[(std::size_t)i * k + j];
                    }
                }
            }
            if (b.requires_grad()) {
                std::vector<double>& db = adj.touch(b);
                if (!tb) {
                    // dB[k,n] += op(A)^T * dC
                    if (!ta) gemm_at_acc(a.data(), dout, db.data(), k, m, n);
                    else gemm_acc(a.data(), dout, db.data(), k, m, n);
                } else {
                    // stored dB[n,k] += dC^T * op(A)
                    if (!ta) {
                        gemm_at_acc(dout, a.data(), db.data(), n, m, k);
                    } else {
                        std::vector<double> t((std::size_t)k * n, 0.0);
                        gemm_acc(a.data(), dout, t.data(), k, m, n);  // logical dB
                        for (int i = 0; i < k; ++i)
                            for (int j = 0; j < n; ++j) db[(std::size_t)j * k + i] += t[(std::size_t)i * n + j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
    const bool rec = want_record({&a, &b});
    Tensor out = result_like(a.shape(), a.requires_grad() || b.requires_grad());
    const std::size_t n = (std::size_t)a.numel();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    if (rec) {
        Tape::active()->record(out, [a, b, n](const double* dout, AdjointStore& adj) {
            if (a.requires_grad()) kernels::axpy(1.0, dout, adj.touch(a).data(), n);
            if (b.requires_grad()) kernels::axpy(1.0, dout, adj.touch(b).data(), n);
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
    const bool rec = want_record({&a, &b});
    Tensor out = result_like(a.shape(), a.requires_grad() || b.requires_grad());
    const std::size_t n = (std::size_t)a.numel();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    if (rec) {
        Tape::active()->record(out, [a, b, n](const double* dout, AdjointStore& adj) {
            if (a.requires_grad()) {
                double* da = adj.touch(a).data();
                const double* pb2 = b.data();
                for (std::size_t i = 0; i < n; ++i) da[i] += dout[i] * pb2[i];
            }
            if (b.requires_grad()) {
                double* db = adj.touch(b).data();
                const double* pa2 = a.data();
                for (std::size_t i = 0; i < n; ++i) db[i] += dout[i] * pa2[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& x, double c) {
    const bool rec = want_record({&x});
    Tensor out = result_like(x.shape(), x.requires_grad());
    const std::size_t n = (std::size_t)x.numel();
    const double* px = x.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) po[i] = c * px[i];
    if (rec) {
        Tape::active()->record(out, [x, c, n](const double* dout, AdjointStore& adj) {
            kernels::axpy(c, dout, adj.touch(x).data(), n);
        });
    }
    return out;
}

Tensor gelu(const Tensor& x) {
    const bool rec = want_record({&x});
    Tensor out = result_like(x.shape(), x.requires_grad());
    kernels::vgelu(x.data(), out.data(), (std::size_t)x.numel());
    if (rec) {
        Tape::active()->record(out, [x](const double* dout, AdjointStore& adj) {
            const std::size_t n = (std::size_t)x.numel();
            std::vector<double> g(n);
            kernels::vgelu_grad(x.data(), g.data(), n);
            double* dx = adj.touch(x).data();
            for (std::size_t i = 0; i < n; ++i) dx[i] += dout[i] * g[i];
        });
    }
    return out;
}

Tensor softmax_lastdim(const Tensor& x) {
    if (x.rank() < 1) shape_error("softmax_lastdim", x.shape(), {});
    const int cols = (int)x.dim(x.rank() - 1);
    const int rows = (int)(x.numel() / cols);
    const bool rec = want_record({&x});
    Tensor out = result_like(x.shape(), x.requires_grad());
    std::memcpy(out.data(), x.data(), (std::size_t)x.numel() * sizeof(double));
    kernels::softmax_rows(out.data(), rows, cols);
    if (rec) {
        Tape::active()->record(out, [x, out, rows, cols](const double* dout, AdjointStore& adj) {
            double* dx = adj.touch(x).data();
            const double* y = out.data();
            for (int r = 0; r < rows; ++r) {
                const std::size_t off = (std::size_t)r * cols;
                double dotv = 0;
                for (int j = 0; j < cols; ++j) dotv += dout[off + j] * y[off + j];
                for (int j = 0; j < cols; ++j)
                    dx[off + j] += y[off + j] * (dout[off + j] - dotv);
            }
        });
    }
    return out;
}

Tensor layernorm_lastdim(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (x.rank() < 1) shape_error("layernorm_lastdim", x.shape(), {});
    const int cols = (int)x.dim(x.rank() - 1);
    const int rows = (int)(x.numel() / cols);
    if (gain.rank() != 1 || gain.dim(0) != cols) shape_error("layernorm_lastdim", x.shape(), gain.shape());
    if (bias.rank() != 1 || bias.dim(0) != cols) shape_error("layernorm_lastdim", x.shape(), bias.shape());

    const bool rec = want_record({&x, &gain, &bias});
    Tensor out = result_like(x.shape(), x.requires_grad() || gain.requires_grad() || bias.requires_grad());

    // saved for backward: normalized activations and inverse stddevs
    auto xhat = std::make_shared<std::vector<double>>((std::size_t)x.numel());
    auto inv_std = std::make_shared<std::vector<double>>((std::size_t)rows);

    const double* px = x.data();
    const double* pg = gain.data();
    const double* pb = bias.data();
    double* po = out.data();
    for (int r = 0; r < rows; ++r) {
        const std::size_t off = (std::size_t)r * cols;
        double mu = 0;
        for (int j = 0; j < cols; ++j) mu += px[off + j];
        mu /= cols;
        double var = 0;
        for (int j = 0; j < cols; ++j) {
            const double d = px[off + j] - mu;
            var += d * d;
        }
        var /= cols;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[(std::size_t)r] = is;
        for (int j = 0; j < cols; ++j) {
            const double xh = (px[off + j] - mu) * is;
            (*xhat)[off + j] = xh;
            po[off + j] = xh * pg[j] + pb[j];
        }
    }

    if (rec) {
        Tape::active()->record(out, [x, gain, bias, xhat, inv_std, rows, cols](
                                        const double* dout, AdjointStore& adj) {
            const double* pg = gain.data();
            if (gain.requires_grad()) {
                double* dg = adj.touch(gain).data();
                for (int r = 0; r < rows; ++r) {
                    const std::size_t off = (std::size_t)r * cols;
                    for (int j = 0; j < cols; ++j) dg[j] += dout[off + j] * (*xhat)[off + j];
                }
            }
            if (bias.requires_grad()) {
                double* db = adj.touch(bias).data();
                for (int r = 0; r < rows; ++r) {
                    const std::size_t off = (std::size_t)r * cols;
                    for (int j = 0; j < cols; ++j) db[j] += dout[off + j];
                }
            }
            if (x.requires_grad()) {
                double* dx = adj.touch(x).data();
                for (int r = 0; r < rows; ++r) {
                    const std::size_t off = (std::size_t)r * cols;
                    double sum_dxh = 0, sum_dxh_xh = 0;
                    for (int j = 0; j < cols; ++j) {
                        const double dxh = dout[off + j] * pg[j];
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * (*xhat)[off + j];
                    }
                    const double is = (*inv_std)[(std::size_t)r];
                    for (int j = 0; j < cols; ++j) {
                        const double dxh = dout[off + j] * pg[j];
                        dx[off + j] += is * (dxh - sum_dxh / cols -
                                             (*xhat)[off + j] * sum_dxh_xh / cols);
                    }
                }
            }
        });
    }
    return out;
}

Tensor embed_lookup(const Tensor& table, std::span<const int> ids) {
    if (table.rank() != 2) shape_error("embed_lookup", table.shape(), {});
    const int64_t v = table.dim(0);
    const int64_t d = table.dim(1);
    for (int id : ids)
        if (id < 0 || id >= v)
            throw std::invalid_argument("embed_lookup: id " + std::to_string(id) +
                                        " out of range [0," + std::to_string(v) + ")");
    const bool rec = want_record({&table});
    Tensor out = result_like({(int64_t)ids.size(), d}, table.requires_grad());
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::memcpy(out.data() + i * (std::size_t)d, table.data() + (std::size_t)ids[i] * d,
                    (std::size_t)d * sizeof(double));
    if (rec) {
        std::vector<int> ids_copy(ids.begin(), ids.end());
        Tape::active()->record(out, [table, ids_copy, d](const double* dout, AdjointStore& adj) {
            double* dt = adj.touch(table).data();
            for (std::size_t i = 0; i < ids_copy.size(); ++i)
                kernels::axpy(1.0, dout + i * (std::size_t)d,
                              dt + (std::size_t)ids_copy[i] * d, (std::size_t)d);
        });
    }
    return out;
}

Tensor concat_lastdim(std::span<const Tensor> xs) {
    if (xs.empty()) throw std::invalid_argument("concat_lastdim: no inputs");
    const int rank = xs[0].rank();
    int64_t total_last = 0;
    for (const Tensor& t : xs) {
        if (t.rank() != rank) shape_error("concat_lastdim", xs[0].shape(), t.shape());
        for (int i = 0; i + 1 < rank; ++i)
            if (t.dim(i) != xs[0].dim(i)) shape_error("concat_lastdim", xs[0].shape(), t.shape());
        total_last += t.dim(rank - 1);
    }
    Shape out_shape = xs[0].shape();
    out_shape[(std::size_t)rank - 1] = total_last;
    const int64_t rows = shape_numel(out_shape) / total_last;

    bool any_rg = false;
    for (const Tensor& t : xs) any_rg |= t.requires_grad();
    const bool rec = Tape::active() && any_rg;
    Tensor out = result_like(out_shape, any_rg);

    int64_t col_off = 0;
    for (const Tensor& t : xs) {
        const int64_t tc = t.dim(rank - 1);
        for (int64_t r = 0; r < rows; ++r)
            std::memcpy(out.data() + (std::size_t)(r * total_last + col_off),
                        t.data() + (std::size_t)(r * tc), (std::size_t)tc * sizeof(double));
        col_off += tc;
    }

    if (rec) {
        std::vector<Tensor> inputs(xs.begin(), xs.end());
        Tape::active()->record(out, [inputs, rows, total_last](const double* dout, AdjointStore& adj) {
            int64_t off = 0;
            for (const Tensor& t : inputs) {
                const int64_t tc = t.shape().back();
                if (t.requires_grad()) {
                    double* dt = adj.touch(t).data();
                    for (int64_t r = 0; r < rows; ++r)
                        kernels::axpy(1.0, dout + (std::size_t)(r * total_last + off),
                                      dt + (std::size_t)(r * tc), (std::size_t)tc);
                }
                off += tc;
            }
        });
    }
    return out;
}

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len) {
    const int rank = x.rank();
    if (axis != 0 && axis != rank - 1)
        throw std::invalid_argument("slice: axis must be 0 or last, got " + std::to_string(axis));
    const int64_t extent = x.dim(axis);
    if (start < 0 || len <= 0 || start + len > extent)
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") out of extent " +
                                    std::to_string(extent) + " in " + shape_str(x.shape()));
    Shape out_shape = x.shape();
    out_shape[(std::size_t)axis] = len;
    const bool rec = want_record({&x});
    Tensor out = result_like(out_shape, x.requires_grad());

    if (axis == 0) {
        const int64_t row = x.numel() / extent;
        std::memcpy(out.data(), x.data() + (std::size_t)(start * row),
                    (std::size_t)(len * row) * sizeof(double));
        if (rec) {
            Tape::active()->record(out, [x, start, len, row](const double* dout, AdjointStore& adj) {
                double* dx = adj.touch(x).data();
                kernels::axpy(1.0, dout, dx + (std::size_t)(start * row), (std::size_t)(len * row));
            });
        }
    } else {
        const int64_t cols = extent;
        const int64_t rows = x.numel() / cols;
        for (int64_t r = 0; r < rows; ++r)
            std::memcpy(out.data() + (std::size_t)(r * len),
                        x.data() + (std::size_t)(r * cols + start), (std::size_t)len * sizeof(double));
        if (rec) {
            Tape::active()->record(out, [x, start, len, rows, cols](const double* dout, AdjointStore& adj) {
                double* dx = adj.touch(x).data();
                for (int64_t r = 0; r < rows; ++r)
                    kernels::axpy(1.0, dout + (std::size_t)(r * len),
                                  dx + (std::size_t)(r * cols + start), (std::size_t)len);
            });
        }
    }
    return out;
}

Tensor reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel())
        shape_error("reshape", x.shape(), new_shape);
    const bool rec = want_record({&x});
    Tensor out = result_like(new_shape, x.requires_grad());
    std::memcpy(out.data(), x.data(), (std::size_t)x.numel() * sizeof(double));
    if (rec) {
        Tape::active()->record(out, [x](const double* dout, AdjointStore& adj) {
            kernels::axpy(1.0, dout, adj.touch(x).data(), (std::size_t)x.numel());
        });
    }
    return out;
}

Tensor mean(const Tensor& x) {
    const bool rec = want_record({&x});
    Tensor out = result_like({1}, x.requires_grad());
    const std::size_t n = (std::size_t)x.numel();
    double s = 0;
    const double* px = x.data();
    for (std::size_t i = 0; i < n; ++i) s += px[i];
    out.data()[0] = s / (double)n;
    if (rec) {
        Tape::active()->record(out, [x, n](const double* dout, AdjointStore& adj) {
            double* dx = adj.touch(x).data();
            const double g = dout[0] / (double)n;
            for (std::size_t i = 0; i < n; ++i) dx[i] += g;
        });
    }
    return out;
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            std::span<const double> weights) {
    if (logits.rank() != 2) shape_error("cross_entropy_logits", logits.shape(), {});
    const int rows = (int)logits.dim(0);
    const int cols = (int)logits.dim(1);
    if ((int)targets.size() != rows)
        throw std::invalid_argument("cross_entropy_logits: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(rows) + " rows");
    if (!weights.empty() && (int)weights.size() != rows)
        throw std::invalid_argument("cross_entropy_logits: weights length mismatch");
    for (int t : targets)
        if (t < 0 || t >= cols)
            throw std::invalid_argument("cross_entropy_logits: target " + std::to_string(t) +
                                        " out of range [0," + std::to_string(cols) + ")");

    // softmax probabilities are saved for the backward pass
    auto probs = std::make_shared<std::vector<double>>(logits.values());
    kernels::softmax_rows(probs->data(), rows, cols);

    double wsum = 0, loss = 0;
    for (int r = 0; r < rows; ++r) {
        const double w = weights.empty() ? 1.0 : weights[(std::size_t)r];
        const double p = (*probs)[(std::size_t)r * cols + targets[(std::size_t)r]];
        loss += w * -std::log(p);
        wsum += w;
    }
    if (wsum <= 0) throw std::invalid_argument("cross_entropy_logits: all weights are zero");
    const bool rec = want_record({&logits});
    Tensor out = result_like({1}, logits.requires_grad());
    out.data()[0] = loss / wsum;

    if (rec) {
        std::vector<int> tgt(targets.begin(), targets.end());
        std::vector<double> wts(weights.begin(), weights.end());
        Tape::active()->record(out, [logits, probs, tgt, wts, rows, cols, wsum](
                                        const double* dout, AdjointStore& adj) {
            double* dl = adj.touch(logits).data();
            for (int r = 0; r < rows; ++r) {
                const double w = wts.empty() ? 1.0 : wts[(std::size_t)r];
                if (w == 0.0) continue;
                const double g = dout[0] * w / wsum;
                const std::size_t off = (std::size_t)r * cols;
                for (int j = 0; j < cols; ++j) dl[off + j] += g * (*probs)[off + j];
                dl[off + tgt[(std::size_t)r]] -= g;
            }
        });
    }
    return out;
}

Tensor mse(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mse", a.shape(), b.shape());
    const bool rec = want_record({&a, &b});
    Tensor out = result_like({1}, a.requires_grad() || b.requires_grad());
    const std::size_t n = (std::size_t)a.numel();
    const double* pa = a.data();
    const double* pb = b.data();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pa[i] - pb[i];
        s += d * d;
    }
    out.data()[0] = s / (double)n;
    if (rec) {
        Tape::active()->record(out, [a, b, n](const double* dout, AdjointStore& adj) {
            const double g = 2.0 * dout[0] / (double)n;
            const double* pa2 = a.data();
            const double* pb2 = b.data();
            if (a.requires_grad()) {
                double* da = adj.touch(a).data();
                for (std::size_t i = 0; i < n; ++i) da[i] += g * (pa2[i] - pb2[i]);
            }
            if (b.requires_grad()) {
                double* db = adj.touch(b).data();
                for (std::size_t i = 0; i < n; ++i) db[i] -= g * (pa2[i] - pb2[i]);
            }
        });
    }
    return out;
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
    x.set_requires_grad(true);
    x.zero_grad();
    std::vector<double> analytic;
    {
        Tape tape;
        Tensor y = f(x);
        if (y.numel() != 1) throw std::invalid_argument("finite_diff_check: f must be scalar-valued");
        if (!std::isfinite(y.item()))
            throw std::invalid_argument("finite_diff_check: f(x) is not finite");
        tape.backward(y);
        analytic = x.grad();
    }
    double max_rel = 0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + h;
        const double fp = f(x).item();
        x.data()[i] = orig - h;
        const double fm = f(x).item();
        x.data()[i] = orig;
        const double numeric = (fp - fm) / (2 * h);
        const double a = analytic[(std::size_t)i];
        const double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace forge
