//
// Copyright 2026 The Shaky Ladder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "shaky/noise.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "shaky/core.h"

namespace shaky {
namespace {

uint64_t SplitMix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Log of the Binomial(m, p) mass at x. Written so that the p = 1/2 terms
// at x and m - x are bitwise equal.
double LogBinomialTerm(int64_t m, int64_t x, double log_p, double log_q) {
  const double log_choose =
      std::lgamma(static_cast<double>(m) + 1.0) -
      (std::lgamma(static_cast<double>(x) + 1.0) +
       std::lgamma(static_cast<double>(m - x) + 1.0));
  return log_choose + (static_cast<double>(x) * log_p +
                       static_cast<double>(m - x) * log_q);
}

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t x = seed;
  for (auto& word : state_) word = SplitMix64(x);
}

Rng Rng::ForStream(uint64_t seed, uint64_t stream) {
  return Rng(DeriveSeed(seed, stream));
}

uint64_t Rng::NextU64() {
  const uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double Rng::NextOpenUnit() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  uint64_t x = seed ^ (0x6a09e667f3bcc909ULL * (stream + 1));
  SplitMix64(x);
  return SplitMix64(x);
}

double LaplaceFromUniform(double u, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("Laplace scale must be > 0");
  if (!(u > -0.5 && u <= 0.5)) {
    throw InvalidArgument("Laplace uniform must lie in (-1/2, 1/2]");
  }
  double unit = 0.0;
  if (u > 0.0) {
    unit = -std::log1p(-2.0 * u);
  } else if (u < 0.0) {
    unit = std::log1p(2.0 * u);
  }
  return scale * unit;
}

double Laplace(Rng& rng, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("Laplace scale must be > 0");
  return LaplaceFromUniform(rng.NextOpenUnit() - 0.5, scale);
}

double Gaussian(Rng& rng, double stddev) {
  if (!(stddev > 0.0)) throw InvalidArgument("Gaussian stddev must be > 0");
  const double u1 = rng.NextOpenUnit();
  const double u2 = rng.NextOpenUnit();
  return stddev * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void FillRandomBits(Rng& rng, std::span<uint8_t> bits) {
  std::size_t i = 0;
  while (i < bits.size()) {
    uint64_t word = rng.NextU64();
    const std::size_t end = std::min(bits.size(), i + 64);
    for (; i < end; ++i, word >>= 1) bits[i] = static_cast<uint8_t>(word & 1);
  }
}

double BinomialExceedance(int64_t m, double p) {
  if (m < 1) throw InvalidArgument("binomial trial count must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument("binomial probability must lie in [0, 1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double log_p = std::log(p);
  const double log_q = std::log(1.0 - p);

  // Shift by the largest log term so the exponentials cannot underflow as a
  // whole. The mode of the distribution is within one of floor((m+1) p).
  const auto mode = std::clamp<int64_t>(
      static_cast<int64_t>(std::floor(static_cast<double>(m + 1) * p)), 0, m);
  double shift = LogBinomialTerm(m, mode, log_p, log_q);
  if (mode > 0) shift = std::max(shift, LogBinomialTerm(m, mode - 1, log_p, log_q));
  if (mode < m) shift = std::max(shift, LogBinomialTerm(m, mode + 1, log_p, log_q));

  auto term = [&](int64_t x) {
    return std::exp(LogBinomialTerm(m, x, log_p, log_q) - shift);
  };
  // Both tails are summed from the extremes inward, so for p = 1/2 the
  // upper and lower sums see identical term sequences.
  const int64_t half = m / 2;
  double upper = 0.0;
  for (int64_t x = m; 2 * x > m; --x) upper += term(x);
  double lower = 0.0;
  for (int64_t x = 0; 2 * x < m; ++x) lower += term(x);
  const double middle = (m % 2 == 0) ? term(half) : 0.0;
  return upper / (upper + lower + middle);
}

std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void WriteValues(std::ostream& out, std::span<const double> values) {
  for (double v : values) out << FormatDouble(v) << '\n';
}

std::vector<double> ReadValues(std::istream& in) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::stod(line));
  }
  return values;
}

}  // namespace shaky
