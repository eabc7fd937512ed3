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

#include "dbsketch/environment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace dbsketch {
namespace {

Vector StandardNormal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Vector NormalizedTheta(std::uint64_t seed, Eigen::Index d) {
  std::mt19937_64 rng(DeriveSeed(seed, 0));
  Vector theta = StandardNormal(rng, d);
  while (theta.norm() == 0.0) theta = StandardNormal(rng, d);
  return theta / theta.norm();
}

// Round t uses stream t + 1; stream 0 belongs to theta*.
std::mt19937_64 RoundRng(std::uint64_t seed, std::size_t t) {
  return std::mt19937_64(DeriveSeed(seed, static_cast<std::uint64_t>(t) + 1));
}

std::uint32_t ReadBigEndian32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw InvalidArgument("IDX file '" + path + "' is truncated");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64(SplitMix64(master) ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
}

GaussianEnvironment::GaussianEnvironment(const GaussianOptions& options)
    : options_(options) {
  if (options.dim < 1 || options.arms < 1) {
    throw InvalidArgument("GaussianEnvironment: dim and arms must be >= 1");
  }
  if (options.noise < 0.0) throw InvalidArgument("GaussianEnvironment: noise < 0");
  if (options.rank > options.dim) {
    throw InvalidArgument("GaussianEnvironment: rank " +
                          std::to_string(options.rank) + " exceeds dim " +
                          std::to_string(options.dim));
  }
  if (options.normalize_arms && !(options.context_norm > 0.0)) {
    throw InvalidArgument("GaussianEnvironment: context_norm must be positive");
  }
  const auto d = static_cast<Eigen::Index>(options.dim);
  theta_ = NormalizedTheta(options.seed, d);
  if (options.rank > 0) {
    std::mt19937_64 rng(DeriveSeed(options.seed, ~std::uint64_t{0}));
    const auto r = static_cast<Eigen::Index>(options.rank);
    Matrix g(d, r);
    for (Eigen::Index j = 0; j < r; ++j) g.col(j) = StandardNormal(rng, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    basis_ = qr.householderQ() * Matrix::Identity(d, r);
  }
}

Round GaussianEnvironment::RoundAt(std::size_t t) const {
  std::mt19937_64 rng = RoundRng(options_.seed, t);
  const auto d = static_cast<Eigen::Index>(options_.dim);
  const auto k = static_cast<Eigen::Index>(options_.arms);
  Round round;
  round.arms.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    Vector x;
    if (options_.rank > 0) {
      x = basis_ * StandardNormal(rng, basis_.cols());
    } else {
      x = StandardNormal(rng, d);
    }
    if (options_.normalize_arms) {
      const double n = x.norm();
      if (n > options_.context_norm) x *= options_.context_norm / n;
    }
    round.arms.row(i) = x.transpose();
  }
  round.expected = round.arms * theta_;
  round.realized = round.expected + options_.noise * StandardNormal(rng, k);
  return round;
}

OrthonormalEnvironment::OrthonormalEnvironment(const OrthonormalOptions& options)
    : options_(options) {
  if (options.dim < 1 || options.arms < 1) {
    throw InvalidArgument("OrthonormalEnvironment: dim and arms must be >= 1");
  }
  if (options.r < 1 || options.r > options.dim) {
    throw InvalidArgument("OrthonormalEnvironment: r must lie in [1, d], got " +
                          std::to_string(options.r));
  }
  if (options.noise < 0.0) throw InvalidArgument("OrthonormalEnvironment: noise < 0");
  if (options_.weights.empty()) {
    options_.weights.assign(options.r, 1.0 / static_cast<double>(options.r));
  }
  if (options_.weights.size() != options.r) {
    throw InvalidArgument("OrthonormalEnvironment: " +
                          std::to_string(options_.weights.size()) +
                          " weights for r = " + std::to_string(options.r));
  }
  double total = 0.0;
  for (double w : options_.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("OrthonormalEnvironment: weights must be finite and >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("OrthonormalEnvironment: weights sum to " +
                          std::to_string(total) + ", expected 1");
  }
  theta_ = NormalizedTheta(options.seed, static_cast<Eigen::Index>(options.dim));
}

std::vector<std::size_t> OrthonormalEnvironment::DirectionsAt(std::size_t t) const {
  std::mt19937_64 rng = RoundRng(options_.seed, t);
  std::discrete_distribution<std::size_t> pick(options_.weights.begin(),
                                               options_.weights.end());
  std::vector<std::size_t> out(options_.arms);
  for (auto& i : out) i = pick(rng);
  return out;
}

Round OrthonormalEnvironment::RoundAt(std::size_t t) const {
  const auto dirs = DirectionsAt(t);
  const auto d = static_cast<Eigen::Index>(options_.dim);
  const auto k = static_cast<Eigen::Index>(options_.arms);
  Round round;
  round.arms = Matrix::Zero(k, d);
  round.expected.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = static_cast<Eigen::Index>(dirs[static_cast<std::size_t>(i)]);
    round.arms(i, j) = 1.0;
    round.expected(i) = theta_(j);
  }
  // Noise comes from a stream separate from the direction draws.
  std::mt19937_64 rng(DeriveSeed(options_.seed ^ 0x5a5a5a5aULL, t + 1));
  round.realized = round.expected + options_.noise * StandardNormal(rng, k);
  return round;
}

LabeledData LoadLabeledCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read dataset '" + path + "'");
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 2) {
      throw InvalidArgument(path + ":" + std::to_string(line_no) +
                            ": expected label followed by features");
    }
    std::vector<double> values;
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("label");
      for (std::size_t i = 1; i < fields.size(); ++i) {
        values.push_back(std::stod(fields[i]));
      }
    } catch (const std::exception&) {
      if (rows.empty() && labels.empty() && line_no == 1) continue;  // header
      throw InvalidArgument(path + ":" + std::to_string(line_no) +
                            ": non-numeric field");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw InvalidArgument(path + ":" + std::to_string(line_no) + ": has " +
                            std::to_string(values.size()) + " features, expected " +
                            std::to_string(rows.front().size()));
    }
    labels.push_back(label);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InvalidArgument("dataset '" + path + "' has no rows");
  LabeledData data;
  data.labels = std::move(labels);
  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  RequireFinite(data.features, "dataset '" + path + "'");
  return data;
}

LabeledData LoadIdx(const std::string& images_path,
                    const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw InvalidArgument("cannot read IDX images '" + images_path + "'");
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw InvalidArgument("cannot read IDX labels '" + labels_path + "'");

  const std::uint32_t image_magic = ReadBigEndian32(images, images_path);
  if (image_magic != 0x00000803) {
    throw InvalidArgument("'" + images_path + "' is not an IDX3 ubyte file");
  }
  const std::uint32_t n = ReadBigEndian32(images, images_path);
  const std::uint32_t rows = ReadBigEndian32(images, images_path);
  const std::uint32_t cols = ReadBigEndian32(images, images_path);
  const std::uint32_t label_magic = ReadBigEndian32(labels, labels_path);
  if (label_magic != 0x00000801) {
    throw InvalidArgument("'" + labels_path + "' is not an IDX1 ubyte file");
  }
  const std::uint32_t nl = ReadBigEndian32(labels, labels_path);
  if (nl != n) {
    throw InvalidArgument("IDX files disagree: " + std::to_string(n) +
                          " images, " + std::to_string(nl) + " labels");
  }
  const std::size_t d = std::size_t{rows} * cols;
  LabeledData data;
  data.features.resize(n, static_cast<Eigen::Index>(d));
  data.labels.resize(n);
  std::vector<unsigned char> buf(d);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(d))) {
      throw InvalidArgument("IDX file '" + images_path + "' is truncated");
    }
    for (std::size_t j = 0; j < d; ++j) {
      data.features(i, static_cast<Eigen::Index>(j)) = buf[j];
    }
    char label = 0;
    if (!labels.get(label)) {
      throw InvalidArgument("IDX file '" + labels_path + "' is truncated");
    }
    data.labels[i] = static_cast<unsigned char>(label);
  }
  return data;
}

void ScaleToUnitMaxNorm(LabeledData& data) {
  if (data.features.rows() == 0) return;
  const double max_norm = data.features.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) data.features /= max_norm;
}

ClassificationEnvironment::ClassificationEnvironment(
    LabeledData data, const ClassificationOptions& options)
    : data_(std::move(data)), options_(options) {
  if (data_.labels.size() != static_cast<std::size_t>(data_.features.rows())) {
    throw InvalidArgument("ClassificationEnvironment: label count mismatch");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data_.labels.size(); ++i) {
    groups[data_.labels[i]].push_back(i);
  }
  if (groups.find(options.target_label) == groups.end()) {
    throw InvalidArgument("target label " + std::to_string(options.target_label) +
                          " does not occur in the dataset");
  }
  for (auto& [label, idx] : groups) {
    label_set_.push_back(label);
    by_label_.push_back(std::move(idx));
  }
}

std::vector<std::size_t> ClassificationEnvironment::SamplesAt(std::size_t t) const {
  std::mt19937_64 rng = RoundRng(options_.seed, t);
  std::vector<std::size_t> out;
  out.reserve(by_label_.size());
  for (const auto& group : by_label_) {
    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
    out.push_back(group[pick(rng)]);
  }
  return out;
}

Round ClassificationEnvironment::RoundAt(std::size_t t) const {
  const auto samples = SamplesAt(t);
  const auto k = static_cast<Eigen::Index>(samples.size());
  Round round;
  round.arms.resize(k, data_.features.cols());
  round.expected.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::size_t s = samples[static_cast<std::size_t>(i)];
    round.arms.row(i) = data_.features.row(static_cast<Eigen::Index>(s));
    round.expected(i) = data_.labels[s] == options_.target_label ? 1.0 : 0.0;
  }
  round.realized = round.expected;
  return round;
}

}  // namespace dbsketch
