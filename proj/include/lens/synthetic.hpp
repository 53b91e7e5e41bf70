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

#ifndef LENS_SYNTHETIC_HPP_
#define LENS_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lens/table.hpp"

namespace lens {

// A generated table with its error-free counterpart and a row-major mask of
// the cells that were corrupted.
struct SyntheticData {
  Table dirty;
  Table clean;
  std::vector<char> mask;

  bool is_dirty(std::size_t row, std::size_t col) const {
    return mask[row * clean.num_cols() + col] != 0;
  }
  std::size_t num_dirty() const;
};

// Six independent normal columns; in each column a fraction of the rows is
// replaced by mean + 10 sigma.
SyntheticData OutlierBenchmark(std::uint64_t seed, std::size_t rows = 1000,
                               double outlier_rate = 0.05);

// Five numeric features and a numeric target y that depends on them. Each
// feature column gets outliers (8-12 sigma, either side) and missing cells at
// the given rates; the target is never corrupted.
SyntheticData RegressionBenchmark(std::uint64_t seed, std::size_t rows = 1000,
                                  double outlier_rate = 0.10, double missing_rate = 0.10);

// Same features as the regression benchmark, target binned into classes
// "low", "mid" and "high".
SyntheticData ClassificationBenchmark(std::uint64_t seed, std::size_t rows = 1000,
                                      double outlier_rate = 0.10,
                                      double missing_rate = 0.10);

// Six numeric columns with cell errors at the given rate. Most errors are
// gross outliers or missing values that the base detectors vote on; the rest
// are small shifts that no detector sees.
SyntheticData LabelingBenchmark(std::uint64_t seed, std::size_t rows = 1000,
                                double error_rate = 0.05);

// Columns a (integer 0..49), b = 2a + 1 and c = "g" + (a mod 5). A fraction of
// rows has either b or c corrupted (never both).
SyntheticData RepairBenchmark(std::uint64_t seed, std::size_t rows = 1000,
                              double corrupt_rate = 0.10);

// Names accepted by MakeDemo, in listing order.
std::vector<std::string> DemoNames();

// Dirty table of a named demo dataset. Throws kNotFound for an unknown name.
Table MakeDemo(const std::string& name, std::uint64_t seed);

}  // namespace lens

#endif  // LENS_SYNTHETIC_HPP_
