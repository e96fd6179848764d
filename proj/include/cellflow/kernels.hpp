#pragma once

// Dense double-precision kernels used by the LSTM and K-Means inner loops.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on AArch64) are compiled into the same binary
// and chosen once at startup from the CPU's capabilities. Setting the
// environment variable CELLFLOW_SIMD=scalar forces the reference path,
// which makes results comparable across machines.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cellflow::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

/// Raw kernel entry points. Matrices are row-major and contiguous.
struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[r] += sum_c A[r, c] * x[c]
  void (*gemv)(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
  /// y[c] += sum_r A[r, c] * x[r]
  void (*gemv_t)(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
  /// A[r, c] += a[r] * b[c]
  void (*rank1)(double* A, std::size_t rows, std::size_t cols, const double* a, const double* b);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// Tables compiled into this binary and usable on this CPU, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the span wrappers below.
const KernelTable& active() noexcept;

/// Overrides the automatic choice; returns false if `isa` is unavailable.
bool select(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
void gemv(std::span<const double> A, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
void gemv_t(std::span<const double> A, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
void rank1(std::span<double> A, std::size_t rows, std::size_t cols,
           std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sq_dist(std::span<const double> a, std::span<const double> b);

namespace detail {
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;
}  // namespace detail

}  // namespace cellflow::kernels
