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

#include "dbsketch/dyadic.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "json.hpp"

namespace dbsketch {
namespace {

constexpr int kSnapshotVersion = 1;

Matrix InvertShifted(const Matrix& gram, double reg) {
  if (!(reg > 0.0)) {
    throw InvalidArgument("Combine: regularizer must be positive, got " +
                          std::to_string(reg));
  }
  const Eigen::Index n = gram.rows();
  if (n == 0) return Matrix(0, 0);
  Matrix shifted = gram;
  shifted.diagonal().array() += reg;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericError("Combine: bordered gram of size " + std::to_string(n) +
                       " is not positive definite");
  }
  Matrix m = llt.solve(Matrix::Identity(n, n));
  return 0.5 * (m + m.transpose());
}

// Bordered gram [[prefix_gram, P B^T], [B P^T, B B^T]].
Matrix BorderedGram(const Eigen::Ref<const RowMatrix>& prefix,
                    const Matrix& prefix_gram,
                    const Eigen::Ref<const RowMatrix>& block) {
  const Eigen::Index lp = prefix.rows();
  const Eigen::Index lb = block.rows();
  Matrix g(lp + lb, lp + lb);
  g.topLeftCorner(lp, lp) = prefix_gram;
  if (lp > 0 && lb > 0) {
    const Matrix cross = prefix * block.transpose();
    g.topRightCorner(lp, lb) = cross;
    g.bottomLeftCorner(lb, lp) = cross.transpose();
  }
  g.bottomRightCorner(lb, lb) = block * block.transpose();
  return g;
}

std::vector<double> Flatten(const Eigen::Ref<const RowMatrix>& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

RowMatrix Unflatten(const std::vector<double>& values, Eigen::Index rows,
                    Eigen::Index cols) {
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw InvalidArgument("snapshot: matrix payload has " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(rows * cols));
  }
  RowMatrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

nlohmann::json MatrixJson(const Eigen::Ref<const RowMatrix>& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", Flatten(m)}};
}

RowMatrix MatrixFromJson(const nlohmann::json& j) {
  return Unflatten(j.at("data").get<std::vector<double>>(),
                   j.at("rows").get<Eigen::Index>(),
                   j.at("cols").get<Eigen::Index>());
}

}  // namespace

Vector GlobalSketchView::ApplyInverse(const Vector& v) const {
  if (dense) return dense_inverse * v;
  return WoodburyInverseApply(s, m, reg, v);
}

double GlobalSketchView::InverseQuadratic(const Vector& x) const {
  if (dense) return std::max(0.0, x.dot(dense_inverse * x));
  return WoodburyQuadratic(s, m, reg, x);
}

Matrix GlobalSketchView::ApproxGram(double lambda) const {
  if (dense) {
    Matrix g = dense_gram;
    g.diagonal().array() -= lambda;
    return g;
  }
  Matrix g = s.transpose() * s;
  g.diagonal().array() += reg - lambda;
  return g;
}

GlobalSketchView Combine(const GlobalSketchView& prefix,
                         const Eigen::Ref<const RowMatrix>& block, double reg) {
  if (prefix.rows() > 0 && prefix.s.cols() != block.cols()) {
    throw InvalidArgument("Combine: prefix has dimension " +
                          std::to_string(prefix.s.cols()) + ", block has " +
                          std::to_string(block.cols()));
  }
  if (prefix.gram.rows() != prefix.s.rows()) {
    throw InvalidArgument("Combine: prefix gram does not match prefix rows");
  }
  GlobalSketchView out;
  out.reg = reg;
  out.s.resize(prefix.s.rows() + block.rows(), block.cols());
  if (prefix.rows() > 0) out.s.topRows(prefix.s.rows()) = prefix.s;
  out.s.bottomRows(block.rows()) = block;
  out.gram = BorderedGram(prefix.s, prefix.gram, block);
  out.m = InvertShifted(out.gram, reg);
  return out;
}

bool InvariantReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const InvariantCheck& c) { return c.passed; });
}

const InvariantCheck& InvariantReport::Get(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidArgument("no invariant check named '" + name + "'");
}

DyadicSketch::DyadicSketch(const DyadicOptions& options) : options_(options) {
  if (options.dim < 1) throw InvalidArgument("DyadicSketch: dim must be >= 1");
  if (options.l0 < 1) throw InvalidArgument("DyadicSketch: l0 must be >= 1");
  if (!(options.epsilon > 0.0)) {
    throw InvalidArgument("DyadicSketch: epsilon must be positive");
  }
  if (!(options.lambda > 0.0)) {
    throw InvalidArgument("DyadicSketch: lambda must be positive");
  }
  const SketchOptions so{options.kind, options.l0, options.dim, options.lambda,
                         options.alpha_rule};
  blocks_.push_back(Block{SketchState(so, options.path == UpdatePath::kFast),
                          options.l0, 0.0, true, 0, false});
  prefix_s_.resize(0, static_cast<Eigen::Index>(options.dim));
  prefix_gram_.resize(0, 0);
  Recombine();
}

double DyadicSketch::alpha_total() const {
  const double active = fallback_ ? 0.0 : blocks_.back().sketch.alpha();
  return prefix_alpha_ + active;
}

double DyadicSketch::size_cap() const {
  const double scale = options_.path == UpdatePath::kFast ? 0.5 : 1.0;
  return scale * options_.epsilon * static_cast<double>(options_.l0);
}

int DyadicSketch::fallback_threshold() const {
  const double ratio =
      static_cast<double>(options_.dim) / static_cast<double>(options_.l0);
  return static_cast<int>(std::floor(std::log2(ratio + 1.0))) - 1;
}

std::size_t DyadicSketch::sketch_rows() const {
  std::size_t total = 0;
  for (const auto& b : blocks_) total += b.length;
  return total;
}

std::size_t DyadicSketch::stored_values() const {
  std::size_t total = static_cast<std::size_t>(prefix_s_.size() +
                                               prefix_gram_.size() + m_.size());
  if (!fallback_) {
    const auto& active = blocks_.back().sketch;
    total += 2 * active.capacity() * active.dim();
  }
  return total;
}

std::vector<double> DyadicSketch::shrink_sums() const {
  std::vector<double> out;
  for (const auto& b : blocks_) out.push_back(b.shrink_sum());
  return out;
}

std::vector<std::size_t> DyadicSketch::block_lengths() const {
  std::vector<std::size_t> out;
  for (const auto& b : blocks_) out.push_back(b.length);
  return out;
}

void DyadicSketch::Update(const Vector& row) {
  if (static_cast<std::size_t>(row.size()) != options_.dim) {
    throw InvalidArgument("DyadicSketch::Update: row has dimension " +
                          std::to_string(row.size()) + ", expected " +
                          std::to_string(options_.dim));
  }
  RequireFinite(row, "DyadicSketch::Update");
  ++rows_seen_;
  frobenius_seen_ += row.squaredNorm();

  if (!fallback_ &&
      static_cast<int>(blocks_.size()) - 1 >= fallback_threshold()) {
    EngageFallback();
  }
  if (fallback_) {
    fallback_->Update(row);
    return;
  }
  if (options_.path == UpdatePath::kFast) {
    UpdateFast(row);
  } else {
    UpdateStandard(row);
  }
}

void DyadicSketch::RefreshRank(Block& block) const {
  const double mean = frobenius_seen_ / static_cast<double>(rows_seen_);
  if (block.sketch.LastShrinkNonzero(mean)) {
    block.rank_seen = block.length + 1;
  } else {
    block.rank_seen = block.sketch.NumericalRankOfRows();
  }
}

bool DyadicSketch::WouldBeLossy(Block& block, const Vector& row) const {
  if (block.length < block.rank_seen) return true;
  const auto rows = block.sketch.rows();
  std::size_t held = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (rows.row(i).squaredNorm() > 0.0) ++held;
  }
  // A shrink removes the length-th direction, so rank length is already lossy.
  if (held + 1 < block.length) return false;
  Matrix stacked(rows.rows() + 1, rows.cols());
  stacked.topRows(rows.rows()) = rows;
  stacked.bottomRows(1) = row.transpose();
  const std::size_t rank =
      NumericalRank(Svd(stacked).singular_values, Tolerances::kNumericalRank);
  if (rank < block.length) return false;
  block.rank_seen = block.length + 1;
  return true;
}

void DyadicSketch::UpdateStandard(const Vector& row) {
  const double energy = row.squaredNorm();
  {
    Block& active = blocks_.back();
    if (active.size + energy > size_cap() && WouldBeLossy(active, row)) OpenBlock();
  }
  Block& active = blocks_.back();
  if (active.size <= size_cap() && active.size + energy > size_cap()) {
    active.cap_crossed_exact = true;
  }
  active.sketch.Update(row);
  active.size += energy;
  RefreshRank(active);
  Recombine();
}

void DyadicSketch::UpdateFast(const Vector& row) {
  const double energy = row.squaredNorm();
  {
    Block& active = blocks_.back();
    if (active.size + energy > size_cap() && WouldBeLossy(active, row)) OpenBlock();
  }
  Block& active = blocks_.back();
  if (active.size <= size_cap() && active.size + energy > size_cap()) {
    active.cap_crossed_exact = true;
  }
  const bool boundary = active.sketch.used_rows() + 1 == 2 * active.length;
  if (!boundary) {
    // Border M with the new row before it joins S.
    const Vector sx = StackedProduct(row);
    const Vector phi = m_ * sx;
    const double xi = energy - sx.dot(phi) + regularizer();
    if (!(xi > Tolerances::kBorderedPivot)) {
      throw NumericError("DyadicSketch: bordered pivot " + std::to_string(xi) +
                         " is not positive");
    }
    const Eigen::Index n = m_.rows();
    Matrix grown(n + 1, n + 1);
    grown.topLeftCorner(n, n) = m_ + (phi / xi) * phi.transpose();
    grown.topRightCorner(n, 1) = -phi / xi;
    grown.bottomLeftCorner(1, n) = -phi.transpose() / xi;
    grown(n, n) = 1.0 / xi;
    m_.swap(grown);
  }
  active.sketch.Append(row);
  active.size += energy;
  if (boundary) {
    RefreshRank(active);
    Recombine();
  }
}

Vector DyadicSketch::StackedProduct(const Vector& v) const {
  const auto active = blocks_.back().sketch.rows();
  const Eigen::Index lp = prefix_s_.rows();
  Vector out(lp + active.rows());
  if (lp > 0) out.head(lp).noalias() = prefix_s_ * v;
  out.tail(active.rows()).noalias() = active * v;
  return out;
}

void DyadicSketch::Recombine() {
  const auto active = blocks_.back().sketch.rows();
  m_ = InvertShifted(BorderedGram(prefix_s_, prefix_gram_, active),
                     regularizer());
}

void DyadicSketch::OpenBlock() {
  Block& old = blocks_.back();
  old.active = false;
  // A buffered block is frozen at its nominal length.
  const bool compacted = old.sketch.Compact();
  if (compacted) RefreshRank(old);
  const auto rows = old.sketch.rows();

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (rows.row(i).squaredNorm() > 0.0) keep.push_back(i);
  }
  RowMatrix frozen(static_cast<Eigen::Index>(keep.size()), rows.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    frozen.row(static_cast<Eigen::Index>(k)) = rows.row(keep[k]);
  }
  const Eigen::Index lp = prefix_s_.rows();
  const Eigen::Index lf = frozen.rows();

  // Zero rows decouple exactly from M, so the current M restricted to the
  // kept rows is the prefix M.
  Matrix prefix_m(lp + lf, lp + lf);
  if (!compacted) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < lp; ++i) idx.push_back(i);
    for (auto k : keep) idx.push_back(lp + k);
    for (Eigen::Index i = 0; i < lp + lf; ++i) {
      for (Eigen::Index j = 0; j < lp + lf; ++j) {
        prefix_m(i, j) = m_(idx[i], idx[j]);
      }
    }
  }

  prefix_gram_ = BorderedGram(prefix_s_, prefix_gram_, frozen);
  RowMatrix stacked(lp + lf, rows.cols());
  if (lp > 0) stacked.topRows(lp) = prefix_s_;
  if (lf > 0) stacked.bottomRows(lf) = frozen;
  prefix_s_.swap(stacked);
  prefix_alpha_ += old.sketch.alpha();
  if (compacted) prefix_m = InvertShifted(prefix_gram_, options_.lambda + prefix_alpha_);

  const std::size_t length = 2 * old.length;
  const SketchOptions so{options_.kind, length, options_.dim, options_.lambda,
                         options_.alpha_rule};
  const bool buffered = options_.path == UpdatePath::kFast;
  blocks_.push_back(Block{SketchState(so, buffered), length, 0.0, true, 0, false});

  // A buffered sketch starts empty; otherwise its `length` zero rows extend M
  // block-diagonally.
  const auto n = static_cast<Eigen::Index>(buffered ? 0 : length);
  m_ = Matrix::Zero(lp + lf + n, lp + lf + n);
  m_.topLeftCorner(lp + lf, lp + lf) = prefix_m;
  m_.bottomRightCorner(n, n).diagonal().setConstant(1.0 / regularizer());
}

void DyadicSketch::EngageFallback() {
  const GlobalSketchView view = View();
  Matrix gram = view.ApproxGram(options_.lambda);
  gram.diagonal().array() += options_.lambda;
  const auto d = static_cast<Eigen::Index>(options_.dim);
  Matrix inv(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    inv.col(j) = view.ApplyInverse(Vector::Unit(d, j));
  }
  inv = 0.5 * (inv + inv.transpose()).eval();
  prefix_alpha_ += blocks_.back().sketch.alpha();
  blocks_.back().active = false;
  fallback_.emplace(options_.lambda, std::move(gram), std::move(inv));
  m_.resize(0, 0);
}

GlobalSketchView DyadicSketch::View() const {
  GlobalSketchView view;
  if (fallback_) {
    view.dense = true;
    view.reg = options_.lambda;
    view.dense_gram = fallback_->gram();
    view.dense_inverse = fallback_->inverse();
    return view;
  }
  const auto active = blocks_.back().sketch.rows();
  view.reg = regularizer();
  view.s.resize(prefix_s_.rows() + active.rows(),
                static_cast<Eigen::Index>(options_.dim));
  if (prefix_s_.rows() > 0) view.s.topRows(prefix_s_.rows()) = prefix_s_;
  view.s.bottomRows(active.rows()) = active;
  view.gram = BorderedGram(prefix_s_, prefix_gram_, active);
  view.m = m_;
  return view;
}

Vector DyadicSketch::ApplyInverse(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != options_.dim) {
    throw InvalidArgument("DyadicSketch::ApplyInverse: dimension mismatch");
  }
  if (fallback_) return fallback_->ApplyInverse(v);
  const Vector w = m_ * StackedProduct(v);
  const auto active = blocks_.back().sketch.rows();
  const Eigen::Index lp = prefix_s_.rows();
  Vector out = v;
  if (lp > 0) out.noalias() -= prefix_s_.transpose() * w.head(lp);
  out.noalias() -= active.transpose() * w.tail(active.rows());
  return out / regularizer();
}

double DyadicSketch::InverseQuadratic(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != options_.dim) {
    throw InvalidArgument("DyadicSketch::InverseQuadratic: dimension mismatch");
  }
  if (fallback_) return fallback_->InverseQuadratic(x);
  const Vector sx = StackedProduct(x);
  const double q = (x.squaredNorm() - sx.dot(m_ * sx)) / regularizer();
  return std::max(0.0, q);
}

Vector DyadicSketch::InverseQuadratics(const Matrix& arms) const {
  if (static_cast<std::size_t>(arms.cols()) != options_.dim) {
    throw InvalidArgument("DyadicSketch::InverseQuadratics: dimension mismatch");
  }
  if (fallback_) {
    const Matrix xa = arms * fallback_->inverse();
    return xa.cwiseProduct(arms).rowwise().sum().cwiseMax(0.0);
  }
  const auto active = blocks_.back().sketch.rows();
  const Eigen::Index lp = prefix_s_.rows();
  Matrix sx(lp + active.rows(), arms.rows());
  if (lp > 0) sx.topRows(lp).noalias() = prefix_s_ * arms.transpose();
  sx.bottomRows(active.rows()).noalias() = active * arms.transpose();
  const Matrix msx = m_ * sx;
  const Vector correction = sx.cwiseProduct(msx).colwise().sum().transpose();
  const Vector norms = arms.rowwise().squaredNorm();
  return ((norms - correction) / regularizer()).cwiseMax(0.0);
}

Matrix DyadicSketch::ApproxGram() const {
  if (fallback_) {
    Matrix g = fallback_->gram();
    g.diagonal().array() -= options_.lambda;
    return g;
  }
  const auto active = blocks_.back().sketch.rows();
  Matrix g = active.transpose() * active;
  if (prefix_s_.rows() > 0) g.noalias() += prefix_s_.transpose() * prefix_s_;
  g.diagonal().array() += alpha_total();
  return g;
}

InvariantReport DyadicSketch::CheckInvariants() const {
  InvariantReport report;
  const double cap = size_cap();

  {
    InvariantCheck c{"single_active_block", true, 0.0, 1.0, ""};
    double active = 0;
    for (const auto& b : blocks_) active += b.active ? 1 : 0;
    c.measured = active;
    c.limit = fallback_ ? 0.0 : 1.0;
    c.passed = active == c.limit && (fallback_ || blocks_.back().active);
    report.checks.push_back(c);
  }
  {
    // A block is only frozen after its sketch turned lossy: its length was
    // below the rank of the rows it covers.
    InvariantCheck c{"invariant1_rank_vs_length", true, 0.0, 0.0, ""};
    for (std::size_t i = 0; i + 1 < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (!(b.length < b.rank_seen)) {
        c.passed = false;
        c.measured += 1;
        c.detail += "block " + std::to_string(i) + " frozen with rank " +
                    std::to_string(b.rank_seen) + " <= length " +
                    std::to_string(b.length) + "; ";
      }
    }
    report.checks.push_back(c);
  }
  {
    InvariantCheck c{"invariant2_rows_below_dim", true,
                     static_cast<double>(sketch_rows()),
                     static_cast<double>(options_.dim), ""};
    c.passed = fallback_.has_value() || sketch_rows() < options_.dim;
    if (fallback_) c.detail = "dense fallback engaged";
    report.checks.push_back(c);

    // The block-count test and the row-count statement of the same invariant
    // can disagree by one block.
    const int b = static_cast<int>(blocks_.size()) - 1;
    if (!fallback_) {
      const bool count_allows_next = b + 1 < fallback_threshold() + 1;
      const bool rows_allow_next =
          sketch_rows() + 2 * blocks_.back().length < options_.dim;
      if (count_allows_next != rows_allow_next) {
        report.warnings.push_back(
            "block-count threshold " + std::to_string(fallback_threshold()) +
            " and row budget d=" + std::to_string(options_.dim) +
            " disagree about opening block " + std::to_string(b + 1));
      }
    }
  }
  {
    InvariantCheck c{"invariant3_block_size", true, 0.0, cap, ""};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (b.cap_crossed_exact) continue;
      c.measured = std::max(c.measured, b.size);
      if (b.size > cap) {
        c.passed = false;
        c.detail += "block " + std::to_string(i) + " size " +
                    std::to_string(b.size) + "; ";
      }
    }
    report.checks.push_back(c);
  }
  {
    InvariantCheck c{"block_geometry", true, 0.0, 0.0, ""};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const std::size_t expected = options_.l0 << i;
      if (blocks_[i].length != expected ||
          blocks_[i].sketch.capacity() != expected) {
        c.passed = false;
        c.measured += 1;
        c.detail += "block " + std::to_string(i) + " has length " +
                    std::to_string(blocks_[i].length) + "; ";
      }
    }
    report.checks.push_back(c);
  }
  {
    // ceil(min{log2((k + 1) / l0), F / cap}) + 1 with k bounded by
    // min(d, rows). A sketch of length l holds rank l - 1 exactly, hence k + 1.
    const double k = static_cast<double>(
        std::max<std::size_t>(1, std::min(options_.dim, rows_seen_)));
    const double by_rank = std::log2((k + 1.0) / static_cast<double>(options_.l0));
    const double by_mass = frobenius_seen_ / cap;
    const double bound = std::ceil(std::max(0.0, std::min(by_rank, by_mass))) + 1;
    InvariantCheck c{"block_count_bound", true,
                     static_cast<double>(blocks_.size()), bound, ""};
    c.passed = c.measured <= bound;
    report.checks.push_back(c);
  }
  return report;
}

std::string DyadicSketch::SnapshotJson() const {
  nlohmann::json j;
  j["format"] = "dbsketch.dyadic";
  j["version"] = kSnapshotVersion;
  j["options"] = {{"dim", options_.dim},
                  {"l0", options_.l0},
                  {"epsilon", options_.epsilon},
                  {"lambda", options_.lambda},
                  {"kind", ToString(options_.kind)},
                  {"alpha_rule",
                   options_.alpha_rule == AlphaRule::kFull ? "full" : "halved"},
                  {"path", options_.path == UpdatePath::kFast ? "fast"
                                                              : "standard"}};
  j["rows_seen"] = rows_seen_;
  j["frobenius_seen"] = frobenius_seen_;
  j["prefix_alpha"] = prefix_alpha_;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : blocks_) {
    const auto& s = b.sketch;
    blocks.push_back({{"length", b.length},
                      {"size", b.size},
                      {"active", b.active},
                      {"rank_seen", b.rank_seen},
                      {"cap_crossed_exact", b.cap_crossed_exact},
                      {"alpha", s.alpha()},
                      {"shrink_total", s.shrink_total()},
                      {"last_shrink", s.last_shrink()},
                      {"rows_seen", s.rows_seen()},
                      {"frobenius_seen", s.frobenius_seen()},
                      {"pending_rows", s.pending_rows()},
                      {"rows", MatrixJson(s.rows())}});
  }
  j["blocks"] = blocks;
  j["prefix_s"] = MatrixJson(prefix_s_);
  j["prefix_gram"] = MatrixJson(prefix_gram_);
  j["m"] = MatrixJson(m_);
  if (fallback_) {
    j["fallback"] = {{"gram", MatrixJson(fallback_->gram())},
                     {"inverse", MatrixJson(fallback_->inverse())}};
  } else {
    j["fallback"] = nullptr;
  }
  return j.dump();
}

DyadicSketch DyadicSketch::FromSnapshotJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("snapshot: ") + e.what());
  }
  try {
    if (j.at("format") != "dbsketch.dyadic") {
      throw InvalidArgument("snapshot: unexpected format tag");
    }
    if (j.at("version").get<int>() != kSnapshotVersion) {
      throw InvalidArgument("snapshot: unsupported version " +
                            j.at("version").dump());
    }
    const auto& o = j.at("options");
    DyadicOptions options;
    options.dim = o.at("dim").get<std::size_t>();
    options.l0 = o.at("l0").get<std::size_t>();
    options.epsilon = o.at("epsilon").get<double>();
    options.lambda = o.at("lambda").get<double>();
    options.kind = ParseSketchKind(o.at("kind").get<std::string>());
    options.alpha_rule = o.at("alpha_rule") == "halved" ? AlphaRule::kHalved
                                                         : AlphaRule::kFull;
    options.path =
        o.at("path") == "fast" ? UpdatePath::kFast : UpdatePath::kStandard;

    DyadicSketch out(options);
    out.blocks_.clear();
    for (const auto& jb : j.at("blocks")) {
      const std::size_t length = jb.at("length").get<std::size_t>();
      SketchState sketch(SketchOptions{options.kind, length, options.dim,
                                       options.lambda, options.alpha_rule},
                         options.path == UpdatePath::kFast);
      sketch.Restore(MatrixFromJson(jb.at("rows")), jb.at("alpha").get<double>(),
                     jb.at("shrink_total").get<double>(),
                     jb.at("last_shrink").get<double>(),
                     jb.at("rows_seen").get<std::size_t>(),
                     jb.at("frobenius_seen").get<double>(),
                     jb.at("pending_rows").get<std::size_t>());
      out.blocks_.push_back(Block{std::move(sketch), length,
                                  jb.at("size").get<double>(),
                                  jb.at("active").get<bool>(),
                                  jb.at("rank_seen").get<std::size_t>(),
                                  jb.at("cap_crossed_exact").get<bool>()});
    }
    if (out.blocks_.empty()) throw InvalidArgument("snapshot: no blocks");
    out.rows_seen_ = j.at("rows_seen").get<std::size_t>();
    out.frobenius_seen_ = j.at("frobenius_seen").get<double>();
    out.prefix_alpha_ = j.at("prefix_alpha").get<double>();
    out.prefix_s_ = MatrixFromJson(j.at("prefix_s"));
    out.prefix_gram_ = MatrixFromJson(j.at("prefix_gram"));
    out.m_ = MatrixFromJson(j.at("m"));
    if (!j.at("fallback").is_null()) {
      const auto& f = j.at("fallback");
      out.fallback_.emplace(options.lambda, Matrix(MatrixFromJson(f.at("gram"))),
                            Matrix(MatrixFromJson(f.at("inverse"))));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("snapshot: ") + e.what());
  }
}

}  // namespace dbsketch
