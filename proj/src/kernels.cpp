#include "forge/kernels.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#define FORGE_AVX512 1
#endif

namespace forge::kernels {

namespace {

#if FORGE_AVX512

// 4x16 register-blocked microkernel; B panels stream through L1.
void gemm_acc_avx512(const double* __restrict a, const double* __restrict b,
                     double* __restrict c, int m, int k, int n) {
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* a0 = a + (std::size_t)(i + 0) * k;
        const double* a1 = a + (std::size_t)(i + 1) * k;
        const double* a2 = a + (std::size_t)(i + 2) * k;
        const double* a3 = a + (std::size_t)(i + 3) * k;
        int j = 0;
        for (; j + 16 <= n; j += 16) {
            __m512d c00 = _mm512_setzero_pd(), c01 = _mm512_setzero_pd();
            __m512d c10 = _mm512_setzero_pd(), c11 = _mm512_setzero_pd();
            __m512d c20 = _mm512_setzero_pd(), c21 = _mm512_setzero_pd();
            __m512d c30 = _mm512_setzero_pd(), c31 = _mm512_setzero_pd();
            const double* bp = b + j;
            for (int kk = 0; kk < k; ++kk, bp += n) {
                const __m512d b0 = _mm512_loadu_pd(bp);
                const __m512d b1 = _mm512_loadu_pd(bp + 8);
                __m512d va = _mm512_set1_pd(a0[kk]);
                c00 = _mm512_fmadd_pd(va, b0, c00);
                c01 = _mm512_fmadd_pd(va, b1, c01);
                va = _mm512_set1_pd(a1[kk]);
                c10 = _mm512_fmadd_pd(va, b0, c10);
                c11 = _mm512_fmadd_pd(va, b1, c11);
                va = _mm512_set1_pd(a2[kk]);
                c20 = _mm512_fmadd_pd(va, b0, c20);
                c21 = _mm512_fmadd_pd(va, b1, c21);
                va = _mm512_set1_pd(a3[kk]);
                c30 = _mm512_fmadd_pd(va, b0, c30);
                c31 = _mm512_fmadd_pd(va, b1, c31);
            }
            double* cp = c + (std::size_t)i * n + j;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c00));
            _mm512_storeu_pd(cp + 8, _mm512_add_pd(_mm512_loadu_pd(cp + 8), c01));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c10));
            _mm512_storeu_pd(cp + 8, _mm512_add_pd(_mm512_loadu_pd(cp + 8), c11));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c20));
            _mm512_storeu_pd(cp + 8, _mm512_add_pd(_mm512_loadu_pd(cp + 8), c21));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c30));
            _mm512_storeu_pd(cp + 8, _mm512_add_pd(_mm512_loadu_pd(cp + 8), c31));
        }
        for (; j + 8 <= n; j += 8) {
            __m512d c0 = _mm512_setzero_pd(), c1 = _mm512_setzero_pd();
            __m512d c2 = _mm512_setzero_pd(), c3 = _mm512_setzero_pd();
            const double* bp = b + j;
            for (int kk = 0; kk < k; ++kk, bp += n) {
                const __m512d b0 = _mm512_loadu_pd(bp);
                c0 = _mm512_fmadd_pd(_mm512_set1_pd(a0[kk]), b0, c0);
                c1 = _mm512_fmadd_pd(_mm512_set1_pd(a1[kk]), b0, c1);
                c2 = _mm512_fmadd_pd(_mm512_set1_pd(a2[kk]), b0, c2);
                c3 = _mm512_fmadd_pd(_mm512_set1_pd(a3[kk]), b0, c3);
            }
            double* cp = c + (std::size_t)i * n + j;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c0));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c1));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c2));
            cp += n;
            _mm512_storeu_pd(cp, _mm512_add_pd(_mm512_loadu_pd(cp), c3));
        }
        for (; j < n; ++j) {
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            for (int kk = 0; kk < k; ++kk) {
                const double bv = b[(std::size_t)kk * n + j];
                s0 += a0[kk] * bv;
                s1 += a1[kk] * bv;
                s2 += a2[kk] * bv;
                s3 += a3[kk] * bv;
            }
            c[(std::size_t)(i + 0) * n + j] += s0;
            c[(std::size_t)(i + 1) * n + j] += s1;
            c[(std::size_t)(i + 2) * n + j] += s2;
            c[(std::size_t)(i + 3) * n + j] += s3;
        }
    }
    for (; i < m; ++i) {
        const double* ar = a + (std::size_t)i * k;
        double* cr = c + (std::size_t)i * n;
        int j = 0;
        for (; j + 8 <= n; j += 8) {
            __m512d acc = _mm512_setzero_pd();
            const double* bp = b + j;
            for (int kk = 0; kk < k; ++kk, bp += n)
                acc = _mm512_fmadd_pd(_mm512_set1_pd(ar[kk]), _mm512_loadu_pd(bp), acc);
            _mm512_storeu_pd(cr + j, _mm512_add_pd(_mm512_loadu_pd(cr + j), acc));
        }
        for (; j < n; ++j) {
            double s = 0;
            for (int kk = 0; kk < k; ++kk) s += ar[kk] * b[(std::size_t)kk * n + j];
            cr[j] += s;
        }
    }
}

#endif  // FORGE_AVX512

[[maybe_unused]] void gemm_acc_generic(const double* __restrict a, const double* __restrict b,
                                       double* __restrict c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ar = a + (std::size_t)i * k;
        double* cr = c + (std::size_t)i * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = ar[kk];
            const double* br = b + (std::size_t)kk * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

thread_local std::vector<double> scratch_transpose;

}  // namespace

void gemm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
#if FORGE_AVX512
    gemm_acc_avx512(a, b, c, m, k, n);
#else
    gemm_acc_generic(a, b, c, m, k, n);
#endif
}

void gemm_bt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    // materialize B^T once; the broadcast kernel is much faster than
    // horizontal dot-product reductions
    scratch_transpose.resize((std::size_t)k * n);
    double* bt = scratch_transpose.data();
    for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < k; ++kk) bt[(std::size_t)kk * n + j] = b[(std::size_t)j * k + kk];
    gemm_acc(a, bt, c, m, k, n);
}

void gemm_at_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    scratch_transpose.resize((std::size_t)m * k);
    double* at = scratch_transpose.data();
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) at[(std::size_t)i * k + kk] = a[(std::size_t)kk * m + i];
    gemm_acc(at, b, c, m, k, n);
}

namespace {

// exp via Cephes-style range reduction: x = n*ln2 + r, e^x = 2^n * P(r)/Q(r).
// Max observed error ~1 ulp; exact at x == 0.
constexpr double kExpHi = 709.0;
constexpr double kExpLo = -709.0;
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kC1 = 6.93145751953125e-1;
constexpr double kC2 = 1.42860682030941723212e-6;
constexpr double kP0 = 1.26177193074810590878e-4;
constexpr double kP1 = 3.02994407707441961300e-2;
constexpr double kP2 = 9.99999999999999999910e-1;
constexpr double kQ0 = 3.00198505138664455042e-6;
constexpr double kQ1 = 2.52448340349684104192e-3;
constexpr double kQ2 = 2.27265548208155028766e-1;
constexpr double kQ3 = 2.00000000000000000005e0;

inline double exp_scalar(double x) {
    if (x > kExpHi) return HUGE_VAL;
    if (x < kExpLo) return 0.0;
    double n = std::floor(kLog2E * x + 0.5);
    double r = x - n * kC1 - n * kC2;
    const double rr = r * r;
    double p = r * (kP2 + rr * (kP1 + rr * kP0));
    const double q = kQ3 + rr * (kQ2 + rr * (kQ1 + rr * kQ0));
    double e = 1.0 + 2.0 * p / (q - p);
    return std::ldexp(e, (int)n);
}

#if FORGE_AVX512

inline __m512d exp_zmm(__m512d x) {
    const __m512d hi = _mm512_set1_pd(kExpHi), lo = _mm512_set1_pd(kExpLo);
    const __m512d xc = _mm512_max_pd(_mm512_min_pd(x, hi), lo);
    __m512d n = _mm512_roundscale_pd(
        _mm512_fmadd_pd(_mm512_set1_pd(kLog2E), xc, _mm512_set1_pd(0.5)),
        _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m512d r = _mm512_fnmadd_pd(n, _mm512_set1_pd(kC1), xc);
    r = _mm512_fnmadd_pd(n, _mm512_set1_pd(kC2), r);
    const __m512d rr = _mm512_mul_pd(r, r);
    __m512d p = _mm512_fmadd_pd(rr, _mm512_set1_pd(kP0), _mm512_set1_pd(kP1));
    p = _mm512_fmadd_pd(rr, p, _mm512_set1_pd(kP2));
    p = _mm512_mul_pd(r, p);
    __m512d q = _mm512_fmadd_pd(rr, _mm512_set1_pd(kQ0), _mm512_set1_pd(kQ1));
    q = _mm512_fmadd_pd(rr, q, _mm512_set1_pd(kQ2));
    q = _mm512_fmadd_pd(rr, q, _mm512_set1_pd(kQ3));
    const __m512d two_p = _mm512_add_pd(p, p);
    __m512d e = _mm512_add_pd(_mm512_set1_pd(1.0),
                              _mm512_div_pd(two_p, _mm512_sub_pd(q, p)));
    // scale by 2^n
    e = _mm512_scalef_pd(e, n);
    return e;
}

#endif

}  // namespace

void vexp(const double* x, double* out, std::size_t n) {
#if FORGE_AVX512
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(out + i, exp_zmm(_mm512_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = exp_scalar(x[i]);
#else
    for (std::size_t i = 0; i < n; ++i) out[i] = exp_scalar(x[i]);
#endif
}

void vtanh(const double* x, double* out, std::size_t n) {
    // tanh(x) = 1 - 2/(exp(2x)+1), computed on |x| then sign-restored so the
    // exponential never overflows upward; chunked so out may alias x
    constexpr std::size_t kChunk = 512;
    double e[kChunk];
    for (std::size_t base = 0; base < n; base += kChunk) {
        const std::size_t c = std::min(kChunk, n - base);
        for (std::size_t i = 0; i < c; ++i) e[i] = -2.0 * std::fabs(x[base + i]);
        vexp(e, e, c);
        for (std::size_t i = 0; i < c; ++i) {
            const double xi = x[base + i];
            const double t = 1.0 - 2.0 * e[i] / (1.0 + e[i]);
            out[base + i] = xi < 0 ? -t : t;
        }
    }
}

void softmax_rows(double* x, int rows, int cols) {
    std::vector<double>& buf = scratch_transpose;  // reuse scratch
    buf.resize(cols);
    for (int r = 0; r < rows; ++r) {
        double* row = x + (std::size_t)r * cols;
        double mx = row[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        for (int j = 0; j < cols; ++j) buf[j] = row[j] - mx;
        vexp(buf.data(), row, cols);
        double s = 0;
        for (int j = 0; j < cols; ++j) s += row[j];
        const double inv = 1.0 / s;
        for (int j = 0; j < cols; ++j) row[j] *= inv;
    }
}

namespace {
constexpr double kGeluC = 0.7978845608028653558799;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

void vgelu(const double* x, double* out, std::size_t n) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        u[i] = kGeluC * (xi + kGeluA * xi * xi * xi);
    }
    vtanh(u.data(), u.data(), n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * x[i] * (1.0 + u[i]);
}

void vgelu_grad(const double* x, double* dout_dx, std::size_t n) {
    std::vector<double> u(n), th(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        u[i] = kGeluC * (xi + kGeluA * xi * xi * xi);
    }
    vtanh(u.data(), th.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double sech2 = 1.0 - th[i] * th[i];
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * xi * xi);
        dout_dx[i] = 0.5 * (1.0 + th[i]) + 0.5 * xi * sech2 * du;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
#if FORGE_AVX512
    __m512d acc0 = _mm512_setzero_pd(), acc1 = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), acc0);
        acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 8), _mm512_loadu_pd(b + i + 8), acc1);
    }
    double s = _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
#else
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
#endif
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace forge::kernels
