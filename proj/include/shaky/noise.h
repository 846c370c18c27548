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

#ifndef SHAKY_NOISE_H_
#define SHAKY_NOISE_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace shaky {

// xoshiro256** seeded through SplitMix64. The generator and the mapping from
// words to doubles are fixed so that golden files pin the stream on every
// platform.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed);

  // Independent sub-stream for (seed, stream), e.g. one per repetition.
  static Rng ForStream(uint64_t seed, uint64_t stream);

  uint64_t NextU64();
  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double NextOpenUnit();

  uint64_t seed() const { return seed_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<uint64_t>::max();
  }
  result_type operator()() { return NextU64(); }

 private:
  std::array<uint64_t, 4> state_;
  uint64_t seed_;
};

// Mixes a stream id into a seed. Used for per-repetition seeds.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

// Inverse CDF of Laplace(scale) at u in (-1/2, 1/2):
//   x = -scale * sign(u) * ln(1 - 2|u|).
// The result is exactly scale times the value at scale 1.
double LaplaceFromUniform(double u, double scale);

// Laplace with scale parameter `scale` (not standard deviation), so that
// Pr{|X| > t * scale} = exp(-t). Throws InvalidArgument unless scale > 0.
double Laplace(Rng& rng, double scale);

// Centered normal via Box-Muller; one draw consumes two uniforms.
double Gaussian(Rng& rng, double stddev);

// Fills `bits` with i.i.d. fair bits, 64 per generator word, low bit first.
void FillRandomBits(Rng& rng, std::span<uint8_t> bits);

// Exact Pr{Binomial(m, p) > m/2} by log-space summation of every term.
// Throws InvalidArgument for m < 1 or p outside [0, 1].
double BinomialExceedance(int64_t m, double p);

// 17 significant digits, round-trippable.
std::string FormatDouble(double value);

// Golden stream files: one value per line.
void WriteValues(std::ostream& out, std::span<const double> values);
std::vector<double> ReadValues(std::istream& in);

}  // namespace shaky

#endif  // SHAKY_NOISE_H_
