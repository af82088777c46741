/*
 * Copyright 2026 The ftsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ftsim {

// All simulated time is integer microseconds. Files and the CLI speak
// milliseconds; conversion happens only at the I/O boundary.
using Duration = std::chrono::duration<std::int64_t, std::micro>;

// Simulated instants are durations since t = 0.
using SimTime = Duration;

inline constexpr Duration kQuantum{1};
inline constexpr SimTime kNever{std::numeric_limits<std::int64_t>::max()};

inline Duration from_ms(double ms) {
    return Duration{static_cast<std::int64_t>(std::llround(ms * 1000.0))};
}

inline constexpr double to_ms(Duration d) {
    return static_cast<double>(d.count()) / 1000.0;
}

inline constexpr Duration us(std::int64_t v) { return Duration{v}; }
inline constexpr Duration ms(std::int64_t v) { return Duration{v * 1000}; }

// ceil(a / b) for positive b.
inline constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

}  // namespace ftsim
