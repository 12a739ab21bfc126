// Copyright 2026 The vqgan Authors
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
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vqgan {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when the ancilla projection keeps (numerically) nothing.
class DegeneratePostSelection : public Error {
  public:
    DegeneratePostSelection(double keep_prob, const std::string &where);
    double keep_prob() const { return keep_prob_; }

  private:
    double keep_prob_;
};

/**
 * Seeded pseudo-random stream.
 *
 * Wraps mt19937_64 and derives uniform/normal variates by hand so that
 * the sequence is identical on every standard library and the whole
 * state round-trips through state()/set_state().
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller (one variate per call, no caching).
    double normal();
    /// Uniform integer on [0, n). n must be positive.
    std::size_t below(std::size_t n);

    std::string state() const;
    void set_state(const std::string &text);

    friend bool operator==(const Rng &a, const Rng &b) { return a.engine_ == b.engine_; }

  private:
    std::mt19937_64 engine_;
};

/// Independent stream for one consumer, keyed by a fixed label.
Rng derive_stream(std::uint64_t master_seed, std::string_view label);

/**
 * Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
 * concurrency). Callers write only to slot i, so results do not depend on
 * the schedule.
 */
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &fn);

unsigned resolve_threads(unsigned requested);

} // namespace vqgan
