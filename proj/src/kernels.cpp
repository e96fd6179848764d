#include "cellflow/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "cellflow/error.hpp"

namespace cellflow::kernels {
namespace {

const KernelTable* best_table() {
  if (const char* env = std::getenv("CELLFLOW_SIMD")) {
    const std::string want(env);
    for (const KernelTable* t : available_tables()) {
      if (isa_name(t->isa) == want) return t;
    }
  }
  return available_tables().back();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{best_table()};
  return table;
}

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(std::string("kernel operand size mismatch: ") + what);
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = detail::avx2_table()) out.push_back(t);
  if (const KernelTable* t = detail::neon_table()) out.push_back(t);
  return out;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  for (const KernelTable* t : available_tables()) {
    if (t->isa == isa) {
      current().store(t);
      return true;
    }
  }
  return false;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot");
  return active().dot(a.data(), b.data(), a.size());
}

void gemv(std::span<const double> A, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  require(A.size() == rows * cols && x.size() == cols && y.size() == rows, "gemv");
  active().gemv(A.data(), rows, cols, x.data(), y.data());
}

void gemv_t(std::span<const double> A, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  require(A.size() == rows * cols && x.size() == rows && y.size() == cols, "gemv_t");
  active().gemv_t(A.data(), rows, cols, x.data(), y.data());
}

void rank1(std::span<double> A, std::size_t rows, std::size_t cols,
           std::span<const double> a, std::span<const double> b) {
  require(A.size() == rows * cols && a.size() == rows && b.size() == cols, "rank1");
  active().rank1(A.data(), rows, cols, a.data(), b.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "sq_dist");
  return active().sq_dist(a.data(), b.data(), a.size());
}

}  // namespace cellflow::kernels
