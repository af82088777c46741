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

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ftsim {

enum class ViolationKind {
    MalformedDocument,
    DuplicateId,
    AsymmetricLanes,
    SpareHasTasks,
    UnresolvedReference,
    InvalidTask,
    InvalidStateModel,
    InvalidTiming,
    ArchitectureViolation,
    InvalidFault,
};

inline std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::MalformedDocument: return "MalformedDocument";
        case ViolationKind::DuplicateId: return "DuplicateId";
        case ViolationKind::AsymmetricLanes: return "AsymmetricLanes";
        case ViolationKind::SpareHasTasks: return "SpareHasTasks";
        case ViolationKind::UnresolvedReference: return "UnresolvedReference";
        case ViolationKind::InvalidTask: return "InvalidTask";
        case ViolationKind::InvalidStateModel: return "InvalidStateModel";
        case ViolationKind::InvalidTiming: return "InvalidTiming";
        case ViolationKind::ArchitectureViolation: return "ArchitectureViolation";
        case ViolationKind::InvalidFault: return "InvalidFault";
    }
    return "Unknown";
}

struct Violation {
    ViolationKind kind;
    std::string message;
};

/// Thrown when a document is syntactically unreadable (not JSON, truncated).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by build_system / parse_scenario with every invariant violation
/// found, not just the first.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

    [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }

    [[nodiscard]] bool has(ViolationKind k) const noexcept {
        for (const auto& v : violations_)
            if (v.kind == k) return true;
        return false;
    }

private:
    static std::string summarize(const std::vector<Violation>& vs) {
        std::string out = std::to_string(vs.size()) + " violation(s)";
        for (const auto& v : vs) {
            out += "\n  ";
            out += to_string(v.kind);
            out += ": ";
            out += v.message;
        }
        return out;
    }

    std::vector<Violation> violations_;
};

/// A transfer was requested while the bus had no spare bandwidth.
class NoBandwidth : public std::runtime_error {
public:
    NoBandwidth() : std::runtime_error("no spare bus bandwidth for transfer") {}
};

class InsufficientLanes : public std::invalid_argument {
public:
    explicit InsufficientLanes(std::size_t n)
        : std::invalid_argument("cross-monitoring needs at least 2 values, got " + std::to_string(n)) {}
};

class InsufficientInstances : public std::invalid_argument {
public:
    explicit InsufficientInstances(std::size_t n)
        : std::invalid_argument("jitter needs at least 2 task instances, got " + std::to_string(n)) {}
};

}  // namespace ftsim
