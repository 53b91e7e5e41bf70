/*
 * Copyright 2026 The Lens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lens/error.hpp"
#include "lens/rng.hpp"

namespace lens {
namespace {

std::string Cell(double v) { return FormatDecimal(std::round(v * 1e4) / 1e4); }

struct Grid {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
};

SyntheticData Finish(const std::string& name, const Grid& clean, const Grid& dirty,
                     std::vector<char> mask) {
  SyntheticData out;
  out.clean = Table::FromGrid(name, clean.names, clean.rows);
  out.dirty = Table::FromGrid(name, dirty.names, dirty.rows);
  out.mask = std::move(mask);
  return out;
}

std::vector<std::size_t> PickRows(Rng& rng, std::size_t rows, double rate) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(rows)));
  std::vector<std::size_t> picked = rng.SampleWithoutReplacement(rows, k);
  std::sort(picked.begin(), picked.end());
  return picked;
}

// Features x1..x5 ~ N(0, 1) scaled per column, plus the latent target.
struct Latent {
  std::vector<std::array<double, 5>> x;
  std::vector<double> y;
};

constexpr std::array<double, 5> kScale = {1.0, 2.0, 5.0, 10.0, 3.0};
constexpr std::array<double, 5> kOffset = {0.0, 10.0, 50.0, 100.0, -20.0};

Latent MakeLatent(Rng& rng, std::size_t rows) {
  Latent l;
  for (std::size_t r = 0; r < rows; ++r) {
    std::array<double, 5> z{};
    for (double& v : z) v = rng.Normal();
    std::array<double, 5> x{};
    for (std::size_t c = 0; c < 5; ++c) x[c] = kOffset[c] + kScale[c] * z[c];
    l.x.push_back(x);
    l.y.push_back(3.0 * z[0] + 2.0 * z[1] - 1.5 * z[2] + z[3] * z[3] + 0.5 * z[4] +
                  0.3 * rng.Normal());
  }
  return l;
}

SyntheticData FeatureNoise(const std::string& name, Rng& rng, const Latent& l, std::vector<std::string> targets,
                           double outlier_rate, double missing_rate) {
  const std::size_t rows = l.y.size();
  Grid clean;
  clean.names = {"x1", "x2", "x3", "x4", "x5", "y"};
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (double v : l.x[r]) row.push_back(Cell(v));
    row.push_back(targets[r]);
    clean.rows.push_back(std::move(row));
  }
  Grid dirty = clean;
  std::vector<char> mask(rows * 6, 0);
  for (std::size_t c = 0; c < 5; ++c) {
    const std::size_t n_out = static_cast<std::size_t>(std::llround(outlier_rate * rows));
    const std::size_t n_miss = static_cast<std::size_t>(std::llround(missing_rate * rows));
    const std::vector<std::size_t> picked = rng.SampleWithoutReplacement(rows, n_out + n_miss);
    for (std::size_t i = 0; i < picked.size(); ++i) {
      const std::size_t r = picked[i];
      if (i < n_out) {
        const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
        dirty.rows[r][c] = Cell(kOffset[c] + sign * rng.Uniform(8.0, 12.0) * kScale[c]);
      } else {
        dirty.rows[r][c] = "";
      }
      mask[r * 6 + c] = 1;
    }
  }
  return Finish(name, clean, dirty, std::move(mask));
}

}  // namespace

std::size_t SyntheticData::num_dirty() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), char{1}));
}

SyntheticData OutlierBenchmark(std::uint64_t seed, std::size_t rows, double outlier_rate) {
  constexpr std::size_t kCols = 6;
  constexpr std::array<double, kCols> kMean = {0.0, 10.0, 100.0, -5.0, 1000.0, 3.0};
  constexpr std::array<double, kCols> kSd = {1.0, 2.0, 15.0, 0.5, 100.0, 4.0};
  Rng rng(seed);
  Grid clean;
  for (std::size_t c = 0; c < kCols; ++c) clean.names.push_back("c" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (std::size_t c = 0; c < kCols; ++c) row.push_back(Cell(rng.Normal(kMean[c], kSd[c])));
    clean.rows.push_back(std::move(row));
  }
  Grid dirty = clean;
  std::vector<char> mask(rows * kCols, 0);
  for (std::size_t c = 0; c < kCols; ++c) {
    for (std::size_t r : PickRows(rng, rows, outlier_rate)) {
      dirty.rows[r][c] = Cell(kMean[c] + 10.0 * kSd[c]);
      mask[r * kCols + c] = 1;
    }
  }
  return Finish("outliers", clean, dirty, std::move(mask));
}

SyntheticData RegressionBenchmark(std::uint64_t seed, std::size_t rows, double outlier_rate,
                                  double missing_rate) {
  Rng rng(seed);
  const Latent l = MakeLatent(rng, rows);
  std::vector<std::string> targets;
  for (double y : l.y) targets.push_back(Cell(y));
  return FeatureNoise("regression", rng, l, std::move(targets), outlier_rate, missing_rate);
}

SyntheticData ClassificationBenchmark(std::uint64_t seed, std::size_t rows, double outlier_rate,
                                      double missing_rate) {
  Rng rng(seed);
  const Latent l = MakeLatent(rng, rows);
  std::vector<double> sorted = l.y;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[rows / 3];
  const double hi = sorted[(2 * rows) / 3];
  std::vector<std::string> targets;
  for (double y : l.y) targets.push_back(y < lo ? "low" : (y < hi ? "mid" : "high"));
  return FeatureNoise("classification", rng, l, std::move(targets), outlier_rate, missing_rate);
}

SyntheticData LabelingBenchmark(std::uint64_t seed, std::size_t rows, double error_rate) {
  constexpr std::size_t kCols = 6;
  Rng rng(seed);
  Grid clean;
  for (std::size_t c = 0; c < kCols; ++c) clean.names.push_back("m" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (std::size_t c = 0; c < kCols; ++c) {
      row.push_back(Cell(rng.Normal(20.0 * static_cast<double>(c), 1.0 + c)));
    }
    clean.rows.push_back(std::move(row));
  }
  Grid dirty = clean;
  std::vector<char> mask(rows * kCols, 0);
  const std::size_t n_err =
      static_cast<std::size_t>(std::llround(error_rate * static_cast<double>(rows * kCols)));
  for (std::size_t cell : rng.SampleWithoutReplacement(rows * kCols, n_err)) {
    const std::size_t r = cell / kCols;
    const std::size_t c = cell % kCols;
    const double mean = 20.0 * static_cast<double>(c);
    const double sd = 1.0 + c;
    const double kind = rng.Uniform01();
    if (kind < 0.6) {
      const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
      dirty.rows[r][c] = Cell(mean + sign * rng.Uniform(6.0, 15.0) * sd);
    } else if (kind < 0.85) {
      dirty.rows[r][c] = "";
    } else {
      const double v = ParseDecimal(clean.rows[r][c]).value_or(mean);
      dirty.rows[r][c] = Cell(v + (rng.Bernoulli(0.5) ? 1.0 : -1.0) * sd);
    }
    mask[cell] = 1;
  }
  return Finish("labeling", clean, dirty, std::move(mask));
}

SyntheticData RepairBenchmark(std::uint64_t seed, std::size_t rows, double corrupt_rate) {
  Rng rng(seed);
  Grid clean;
  clean.names = {"a", "b", "c"};
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t a = rng.UniformIndex(50);
    clean.rows.push_back({std::to_string(a), std::to_string(2 * a + 1), "g" + std::to_string(a % 5)});
  }
  Grid dirty = clean;
  std::vector<char> mask(rows * 3, 0);
  for (std::size_t r : PickRows(rng, rows, corrupt_rate)) {
    if (rng.Bernoulli(0.5)) {
      dirty.rows[r][1] = rng.Bernoulli(0.5) ? "" : std::to_string(1000 + rng.UniformIndex(9000));
      mask[r * 3 + 1] = 1;
    } else {
      dirty.rows[r][2] = rng.Bernoulli(0.5) ? "" : "g" + std::to_string(5 + rng.UniformIndex(5));
      mask[r * 3 + 2] = 1;
    }
  }
  return Finish("repair", clean, dirty, std::move(mask));
}

std::vector<std::string> DemoNames() {
  return {"demo-outliers", "demo-regression", "demo-classification", "demo-labeling",
          "demo-repair"};
}

Table MakeDemo(const std::string& name, std::uint64_t seed) {
  if (name == "demo-outliers") return OutlierBenchmark(seed).dirty;
  if (name == "demo-regression") return RegressionBenchmark(seed).dirty;
  if (name == "demo-classification") return ClassificationBenchmark(seed).dirty;
  if (name == "demo-labeling") return LabelingBenchmark(seed).dirty;
  if (name == "demo-repair") return RepairBenchmark(seed).dirty;
  Fail(ErrorCode::kNotFound, "unknown demo dataset " + name);
}

}  // namespace lens
