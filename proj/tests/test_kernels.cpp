#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cellflow/error.hpp"
#include "cellflow/kernels.hpp"

namespace cellflow::kernels {
namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

// Tolerance scaled by the magnitude of the summed terms; vector variants
// reassociate sums and fuse multiply-adds.
double tolerance(std::size_t n) { return 1e-13 * static_cast<double>(n + 1) * 4.0; }

TEST(Kernels, ScalarTableIsAlwaysFirst) {
  const auto tables = available_tables();
  ASSERT_FALSE(tables.empty());
  EXPECT_EQ(tables.front()->isa, Isa::Scalar);
}

TEST(Kernels, ScalarReferenceValues) {
  const KernelTable& s = scalar_table();
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  EXPECT_DOUBLE_EQ(s.dot(a, b, 3), 12.0);
  EXPECT_DOUBLE_EQ(s.sq_dist(a, b, 3), 9.0 + 49.0 + 9.0);
  const double A[] = {1, 2, 3, 4, 5, 6};  // 2 x 3
  double y[2] = {1, 1};
  s.gemv(A, 2, 3, a, y);
  EXPECT_DOUBLE_EQ(y[0], 15.0);
  EXPECT_DOUBLE_EQ(y[1], 33.0);
  double yt[3] = {0, 0, 0};
  const double x2[] = {1, -1};
  s.gemv_t(A, 2, 3, x2, yt);
  EXPECT_DOUBLE_EQ(yt[0], -3.0);
  EXPECT_DOUBLE_EQ(yt[2], -3.0);
}

// Every compiled vector variant agrees with the scalar reference on random
// operands of every length up to 70 (covers all remainder paths).
TEST(Kernels, VectorVariantsMatchScalarReference) {
  const KernelTable& ref = scalar_table();
  std::mt19937_64 gen(1234);
  for (const KernelTable* t : available_tables()) {
    SCOPED_TRACE(std::string(isa_name(t->isa)));
    for (std::size_t n = 0; n <= 70; ++n) {
      const auto a = random_vector(gen, n);
      const auto b = random_vector(gen, n);
      EXPECT_NEAR(t->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), tolerance(n));
      EXPECT_NEAR(t->sq_dist(a.data(), b.data(), n), ref.sq_dist(a.data(), b.data(), n), tolerance(n) * 4);

      auto y1 = random_vector(gen, n);
      auto y2 = y1;
      t->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);

      const std::size_t rows = 1 + n % 9;
      const auto A = random_vector(gen, rows * n);
      const auto xr = random_vector(gen, rows);
      auto g1 = random_vector(gen, rows);
      auto g2 = g1;
      t->gemv(A.data(), rows, n, b.data(), g1.data());
      ref.gemv(A.data(), rows, n, b.data(), g2.data());
      for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(g1[r], g2[r], tolerance(n));

      auto t1 = random_vector(gen, n);
      auto t2 = t1;
      t->gemv_t(A.data(), rows, n, xr.data(), t1.data());
      ref.gemv_t(A.data(), rows, n, xr.data(), t2.data());
      for (std::size_t c = 0; c < n; ++c) EXPECT_NEAR(t1[c], t2[c], tolerance(rows));

      auto M1 = A;
      auto M2 = A;
      t->rank1(M1.data(), rows, n, xr.data(), b.data());
      ref.rank1(M2.data(), rows, n, xr.data(), b.data());
      for (std::size_t i = 0; i < M1.size(); ++i) EXPECT_NEAR(M1[i], M2[i], 1e-14);
    }
  }
}

TEST(Kernels, SelectSwitchesActiveTable) {
  const Isa before = active().isa;
  ASSERT_TRUE(select(Isa::Scalar));
  EXPECT_EQ(active().isa, Isa::Scalar);
  EXPECT_TRUE(select(before));
  EXPECT_EQ(active().isa, before);
}

TEST(Kernels, SpanWrappersRejectMismatchedSizes) {
  std::vector<double> a(3), b(4), y(2);
  EXPECT_THROW(dot(a, b), ShapeError);
  EXPECT_THROW(gemv(a, 2, 2, b, y), ShapeError);
  EXPECT_THROW(sq_dist(a, b), ShapeError);
}

}  // namespace
}  // namespace cellflow::kernels
