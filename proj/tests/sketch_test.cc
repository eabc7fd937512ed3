// Copyright 2026 The dbsketch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbsketch/sketch.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace dbsketch {
namespace {

Matrix RandomMatrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double SymAbsMax(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double SymMin(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double Cond(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
}

// Frequent directions written directly against Eigen's SVD.
Matrix ReferenceFdGram(const Matrix& x, int l) {
  Matrix s = Matrix::Zero(l, x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    s.row(l - 1) = x.row(t);
    Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinV);
    Vector sig = svd.singularValues();
    const double shrink = sig.size() >= l ? sig(l - 1) * sig(l - 1) : 0.0;
    s.setZero();
    for (Eigen::Index i = 0; i < sig.size(); ++i) {
      const double v = std::sqrt(std::max(0.0, sig(i) * sig(i) - shrink));
      s.row(i) = v * svd.matrixV().col(i).transpose();
    }
  }
  return s.transpose() * s;
}

SketchState MakeSketch(SketchKind kind, std::size_t l, std::size_t d,
                       double lambda = 1.0) {
  return SketchState(SketchOptions{kind, l, d, lambda, AlphaRule::kFull});
}

Vector E(int d, int i, double scale = 1.0) { return scale * Vector::Unit(d, i); }

TEST(FdUpdateTest, SingleRowKeepsRow) {
  SketchState s = MakeSketch(SketchKind::kFD, 2, 3);
  s.Update(E(3, 0));
  EXPECT_LE((s.rows().row(0).transpose() - E(3, 0)).norm(), 1e-15);
  EXPECT_EQ(s.rows().row(1).norm(), 0.0);
  EXPECT_EQ(s.shrink_total(), 0.0);
}

TEST(FdUpdateTest, TwoOrthogonalRowsShrinkToZero) {
  SketchState s = MakeSketch(SketchKind::kFD, 2, 3);
  s.Update(E(3, 0));
  s.Update(E(3, 1));
  EXPECT_LE(s.rows().norm(), 1e-15);
  EXPECT_NEAR(s.shrink_total(), 1.0, 1e-15);
  EXPECT_LE(s.ApproxGram().norm(), 1e-15);
}

TEST(FdUpdateTest, ErrorMeetsRankOneBound) {
  SketchState s = MakeSketch(SketchKind::kFD, 2, 3);
  s.Update(E(3, 0, 2.0));
  s.Update(E(3, 1));
  Matrix expected = Matrix::Zero(3, 3);
  expected(0, 0) = 3.0;
  EXPECT_LE((s.ApproxGram() - expected).cwiseAbs().maxCoeff(), 1e-14);
  Matrix x(2, 3);
  x << 2, 0, 0, 0, 1, 0;
  const double err = SymAbsMax(x.transpose() * x - s.ApproxGram());
  EXPECT_NEAR(err, 1.0, 1e-14);
  EXPECT_NEAR(BestRankKResidual(x, 1) / (2 - 1), 1.0, 1e-14);
}

TEST(FdUpdateTest, LastRowZeroAndRowsOrthogonal) {
  std::mt19937_64 rng(5);
  SketchState s = MakeSketch(SketchKind::kFD, 4, 7);
  for (int t = 0; t < 40; ++t) {
    s.Update(RandomMatrix(rng, 7, 1));
    EXPECT_EQ(s.rows().row(3).norm(), 0.0);
    const Matrix g = s.rows() * s.rows().transpose();
    const Matrix off = g - Matrix(g.diagonal().asDiagonal());
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, g.maxCoeff()));
  }
}

TEST(FdUpdateTest, MatchesReferenceImplementation) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = RandomMatrix(rng, 30, 9);
    SketchState s = MakeSketch(SketchKind::kFD, 4, 9);
    for (Eigen::Index t = 0; t < x.rows(); ++t) s.Update(x.row(t).transpose());
    const Matrix ref = ReferenceFdGram(x, 4);
    EXPECT_LE((s.ApproxGram() - ref).cwiseAbs().maxCoeff(), 1e-9 * x.squaredNorm());
  }
}

TEST(FdUpdateTest, CovarianceSandwichOnEveryPrefix) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(2, 12);
  for (int rep = 0; rep < 40; ++rep) {
    const int d = dim(rng);
    const int l = std::uniform_int_distribution<int>(2, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    // Decaying column scales give a nontrivial spectrum.
    Matrix x = RandomMatrix(rng, n, d);
    for (int j = 0; j < d; ++j) x.col(j) *= std::pow(0.8, j);
    SketchState s = MakeSketch(SketchKind::kFD, l, d);
    for (int t = 0; t < n; ++t) {
      s.Update(x.row(t).transpose());
      const Matrix xt = x.topRows(t + 1);
      const double fro = xt.squaredNorm();
      const Matrix diff = xt.transpose() * xt - s.ApproxGram();
      EXPECT_GE(SymMin(diff), -1e-8 * fro);
      const double err = SymAbsMax(diff);
      EXPECT_LE(err, s.shrink_total() + 1e-8 * fro);
      double bound = std::numeric_limits<double>::infinity();
      const int kmax = std::min<int>(l - 1, std::min(t + 1, d));
      for (int k = 0; k <= kmax; ++k) {
        bound = std::min(bound, BestRankKResidual(xt, k) / (l - k));
      }
      EXPECT_LE(s.shrink_total(), bound + 1e-8 * fro);
    }
  }
}

TEST(FdUpdateTest, MDiagMatchesShrunkNorms) {
  std::mt19937_64 rng(8);
  SketchState s = MakeSketch(SketchKind::kFD, 3, 5, 0.7);
  for (int t = 0; t < 9; ++t) s.Update(RandomMatrix(rng, 5, 1));
  const Vector m = s.MDiag();
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(m(i), 1.0 / (0.7 + s.rows().row(i).squaredNorm()), 1e-15);
  }
  EXPECT_NEAR(m(2), 1.0 / 0.7, 1e-15);
}

TEST(FdUpdateTest, RejectsBadRows) {
  SketchState s = MakeSketch(SketchKind::kFD, 2, 3);
  EXPECT_THROW(s.Update(Vector::Ones(4)), InvalidArgument);
  Vector bad = Vector::Ones(3);
  bad(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(s.Update(bad), InvalidArgument);
  EXPECT_THROW(MakeSketch(SketchKind::kFD, 0, 3), InvalidArgument);
  EXPECT_THROW(MakeSketch(SketchKind::kFD, 2, 3, 0.0), InvalidArgument);
}

TEST(RfdUpdateTest, AlphaAbsorbsShrink) {
  SketchState s = MakeSketch(SketchKind::kRFD, 2, 3);
  s.Update(E(3, 0, 2.0));
  s.Update(E(3, 1));
  EXPECT_NEAR(s.alpha(), 1.0, 1e-15);
  const Matrix expected = Eigen::Vector3d(4, 1, 1).asDiagonal();
  EXPECT_LE((s.ApproxGram() - expected).cwiseAbs().maxCoeff(), 1e-14);
  const Matrix xtx = Eigen::Vector3d(4, 1, 0).asDiagonal();
  EXPECT_NEAR(SymAbsMax(xtx - s.ApproxGram()), 1.0, 1e-14);
  const Vector m = s.MDiag();
  EXPECT_NEAR(m(0), 1.0 / (1.0 + 1.0 + 3.0), 1e-15);
  EXPECT_NEAR(m(1), 1.0 / (1.0 + 1.0), 1e-15);
}

TEST(RfdUpdateTest, EmptyAndUnderfilled) {
  SketchState s = MakeSketch(SketchKind::kRFD, 3, 4, 2.0);
  EXPECT_EQ(s.alpha(), 0.0);
  EXPECT_EQ(s.MDiag(), Vector::Constant(3, 0.5));
  s.Update(Vector::Ones(4));
  EXPECT_EQ(s.alpha(), 0.0);
  EXPECT_EQ(s.shrink_total(), 0.0);
}

TEST(RfdUpdateTest, HalvedRuleAddsHalf) {
  SketchState s(SketchOptions{SketchKind::kRFD, 2, 3, 1.0, AlphaRule::kHalved});
  s.Update(E(3, 0, 2.0));
  s.Update(E(3, 1));
  EXPECT_NEAR(s.alpha(), 0.5, 1e-15);
  EXPECT_NEAR(s.shrink_total(), 1.0, 1e-15);
}

TEST(RfdUpdateTest, PositiveDefiniteMonotonicity) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 8;
    const Matrix x = RandomMatrix(rng, 30, d);
    SketchState s = MakeSketch(SketchKind::kRFD, 3, d);
    Matrix prev = s.ApproxGram();
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      s.Update(x.row(t).transpose());
      const Matrix cur = s.ApproxGram();
      EXPECT_GE(SymMin(cur - prev), -1e-8 * x.topRows(t + 1).squaredNorm());
      prev = cur;
    }
  }
}

TEST(RfdUpdateTest, WellConditioned) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 10;
    const double lambda = 0.5;
    Matrix x = RandomMatrix(rng, 25, d);
    for (int j = 0; j < d; ++j) x.col(j) *= std::pow(0.7, j);
    SketchState s = MakeSketch(SketchKind::kRFD, 4, d, lambda);
    for (Eigen::Index t = 0; t < x.rows(); ++t) s.Update(x.row(t).transpose());
    const Matrix id = Matrix::Identity(d, d);
    const Matrix sts = s.rows().transpose() * s.rows();
    const double c_rfd = Cond(s.ApproxGram() + lambda * id);
    EXPECT_LE(c_rfd, Cond(sts + lambda * id) * (1 + 1e-6));
    EXPECT_LE(c_rfd, Cond(x.transpose() * x + lambda * id) * (1 + 1e-6));
  }
}

TEST(AppendTest, BuffersUntilDoubleCapacity) {
  std::mt19937_64 rng(12);
  SketchState s = MakeSketch(SketchKind::kFD, 3, 6);
  EXPECT_EQ(s.used_rows(), 3u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_FALSE(s.Append(RandomMatrix(rng, 6, 1)));
    EXPECT_FALSE(s.rows_orthogonal());
  }
  EXPECT_TRUE(s.Append(RandomMatrix(rng, 6, 1)));
  EXPECT_TRUE(s.rows_orthogonal());
  EXPECT_EQ(s.used_rows(), 3u);
  // Three rows in a rank-3 space: the third squared singular value is the
  // shrink, so the last kept row vanishes.
  EXPECT_LE(s.rows().row(2).norm(), 1e-12);
}

TEST(AppendTest, DenseCoreMatchesAnyBufferState) {
  std::mt19937_64 rng(13);
  SketchState s = MakeSketch(SketchKind::kRFD, 3, 7, 0.3);
  Matrix x = RandomMatrix(rng, 20, 7);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    s.Append(x.row(t).transpose());
    const Matrix sr = s.rows();
    Matrix g = sr * sr.transpose();
    g.diagonal().array() += s.regularizer();
    const Matrix ref = g.inverse();
    EXPECT_LE((s.MCore() - ref).cwiseAbs().maxCoeff(), 1e-10);
    const Vector v = RandomMatrix(rng, 7, 1);
    Matrix a = sr.transpose() * sr;
    a.diagonal().array() += s.regularizer();
    const Vector want = a.ldlt().solve(v);
    EXPECT_LE((s.ApplyInverse(v) - want).norm(), 1e-10 * want.norm());
  }
}

TEST(WoodburyTest, ZeroSketchIsPureRegularizer) {
  const RowMatrix s = RowMatrix::Zero(2, 4);
  const Matrix m = Matrix::Identity(2, 2) / 2.0;
  const Vector v = Eigen::Vector4d(1, -2, 3, 4);
  EXPECT_LE((WoodburyInverseApply(s, m, 2.0, v) - v / 2.0).norm(), 1e-15);
  EXPECT_NEAR(WoodburyQuadratic(s, m, 2.0, v), v.squaredNorm() / 2.0, 1e-14);
}

TEST(WoodburyTest, SingleRowE1) {
  RowMatrix s = RowMatrix::Zero(1, 3);
  s(0, 0) = 1.0;
  Matrix m(1, 1);
  m(0, 0) = 0.5;
  const Vector got = WoodburyInverseApply(s, m, 1.0, Vector::Unit(3, 0));
  EXPECT_LE((got - 0.5 * Vector::Unit(3, 0)).norm(), 1e-15);
  EXPECT_NEAR(WoodburyQuadratic(s, m, 1.0, Vector::Unit(3, 0)), 0.5, 1e-15);
}

TEST(WoodburyTest, RandomMatchesDenseInverse) {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 50; ++rep) {
    const RowMatrix s = RandomMatrix(rng, 3, 8);
    const double reg = 0.5;
    Matrix g = s * s.transpose();
    g.diagonal().array() += reg;
    const Matrix m = g.inverse();
    Matrix a = s.transpose() * s;
    a.diagonal().array() += reg;
    const Matrix ainv = a.inverse();
    const Vector v = RandomMatrix(rng, 8, 1);
    const Vector want = ainv * v;
    EXPECT_LE((WoodburyInverseApply(s, m, reg, v) - want).norm(), 1e-8 * want.norm());
    const double q = v.dot(want);
    EXPECT_NEAR(WoodburyQuadratic(s, m, reg, v), q, 1e-8 * q);
  }
}

TEST(WoodburyTest, RejectsMismatchedShapes) {
  const RowMatrix s = RowMatrix::Zero(2, 4);
  EXPECT_THROW(WoodburyInverseApply(s, Matrix::Identity(3, 3), 1.0, Vector::Zero(4)),
               InvalidArgument);
  EXPECT_THROW(WoodburyInverseApply(s, Matrix::Identity(2, 2), 1.0, Vector::Zero(5)),
               InvalidArgument);
  EXPECT_THROW(WoodburyQuadratic(s, Matrix::Identity(2, 2), 0.0, Vector::Zero(4)),
               InvalidArgument);
}

TEST(WoodburyTest, WrongCoreIsDetected) {
  RowMatrix s = RowMatrix::Zero(1, 2);
  s(0, 0) = 10.0;
  Matrix m(1, 1);
  m(0, 0) = 1.0;  // far from 1 / 101
  EXPECT_THROW(WoodburyQuadratic(s, m, 1.0, Vector::Unit(2, 0)), NumericError);
}

TEST(DenseCovarianceTest, E1Update) {
  DenseCovariance c(2, 1.0);
  c.Update(Vector::Unit(2, 0));
  const Matrix expected = Eigen::Vector2d(0.5, 1.0).asDiagonal();
  EXPECT_LE((c.inverse() - expected).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix gram = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  EXPECT_EQ(c.gram(), gram);
}

TEST(DenseCovarianceTest, ZeroRowIsNoOp) {
  DenseCovariance c(3, 2.0);
  const Matrix before = c.inverse();
  c.Update(Vector::Zero(3));
  EXPECT_EQ(c.inverse(), before);
}

TEST(DenseCovarianceTest, RandomRowsMatchDenseInverse) {
  std::mt19937_64 rng(15);
  DenseCovariance c(6, 1.0);
  for (int i = 0; i < 20; ++i) c.Update(RandomMatrix(rng, 6, 1));
  const Matrix ref = c.gram().inverse();
  EXPECT_LE((c.inverse() - ref).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LE((c.gram() * c.inverse() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(),
            1e-6);
  EXPECT_THROW(c.Update(Vector::Zero(5)), InvalidArgument);
}

}  // namespace
}  // namespace dbsketch
