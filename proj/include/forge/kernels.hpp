#pragma once

#include <cstddef>

// Low-level numeric kernels shared by the tensor ops and the inference
// paths. All matrices are dense row-major doubles.
namespace forge::kernels {

// C[M,N] += A[M,K] * B[K,N]
void gemm_acc(const double* a, const double* b, double* c, int m, int k, int n);

// C[M,N] += A[M,K] * B[N,K]^T
void gemm_bt_acc(const double* a, const double* b, double* c, int m, int k, int n);

// C[M,N] += A[K,M]^T * B[K,N]
void gemm_at_acc(const double* a, const double* b, double* c, int m, int k, int n);

// out[i] = exp(x[i]); vectorized, ~1 ulp, exp(0) == 1 exactly.
void vexp(const double* x, double* out, std::size_t n);

// out[i] = tanh(x[i]); vectorized via vexp.
void vtanh(const double* x, double* out, std::size_t n);

// in-place row-wise softmax over the last dimension (rows x cols).
void softmax_rows(double* x, int rows, int cols);

// gelu (tanh approximation) and its derivative evaluated at x.
void vgelu(const double* x, double* out, std::size_t n);
void vgelu_grad(const double* x, double* dout_dx, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x

}  // namespace forge::kernels
