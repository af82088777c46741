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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ftsim/time.hpp"

namespace ftsim {

enum class EventKind {
    FaultActivate,
    FaultClear,
    BITCheck,
    TaskRelease,
    VoteRound,
    PilotApproval,
    ShutdownApplied,
    SelectionDone,
    InstallDone,
    StateTransferDone,
    TransferStall,
    PoliceRound,
    Readmit,
    DeadlineMiss,
    TaskComplete,
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::FaultActivate, EventKind::FaultClear,     EventKind::BITCheck,        EventKind::TaskRelease,
    EventKind::VoteRound,     EventKind::PilotApproval,  EventKind::ShutdownApplied, EventKind::SelectionDone,
    EventKind::InstallDone,   EventKind::StateTransferDone, EventKind::TransferStall, EventKind::PoliceRound,
    EventKind::Readmit,       EventKind::DeadlineMiss,   EventKind::TaskComplete,
};

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::FaultActivate: return "FaultActivate";
        case EventKind::FaultClear: return "FaultClear";
        case EventKind::BITCheck: return "BITCheck";
        case EventKind::TaskRelease: return "TaskRelease";
        case EventKind::VoteRound: return "VoteRound";
        case EventKind::PilotApproval: return "PilotApproval";
        case EventKind::ShutdownApplied: return "ShutdownApplied";
        case EventKind::SelectionDone: return "SelectionDone";
        case EventKind::InstallDone: return "InstallDone";
        case EventKind::StateTransferDone: return "StateTransferDone";
        case EventKind::TransferStall: return "TransferStall";
        case EventKind::PoliceRound: return "PoliceRound";
        case EventKind::Readmit: return "Readmit";
        case EventKind::DeadlineMiss: return "DeadlineMiss";
        case EventKind::TaskComplete: return "TaskComplete";
    }
    return "?";
}

inline std::optional<EventKind> event_kind_from(std::string_view s) {
    for (auto k : kAllEventKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

// Order of simultaneous events: faults first, then built-in test, releases,
// votes, reconfiguration steps, misses, and completions last.
inline constexpr int tie_rank(EventKind k) {
    switch (k) {
        case EventKind::FaultActivate: return 0;
        case EventKind::FaultClear: return 1;
        case EventKind::BITCheck: return 2;
        case EventKind::TaskRelease: return 3;
        case EventKind::VoteRound: return 4;
        case EventKind::PilotApproval: return 5;
        case EventKind::ShutdownApplied: return 6;
        case EventKind::SelectionDone: return 7;
        case EventKind::InstallDone: return 8;
        case EventKind::StateTransferDone: return 9;
        case EventKind::TransferStall: return 10;
        case EventKind::PoliceRound: return 11;
        case EventKind::Readmit: return 12;
        case EventKind::DeadlineMiss: return 13;
        case EventKind::TaskComplete: return 14;
    }
    return 15;
}

struct TraceEvent {
    SimTime time{0};
    EventKind kind = EventKind::VoteRound;
    int lane = -1;
    int proc = -1;
    int app = -1;
    int task = -1;
    std::string detail;  // ';'-separated key=value pairs, never a comma
    std::uint64_t seq = 0;
};

inline bool trace_before(const TraceEvent& a, const TraceEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (tie_rank(a.kind) != tie_rank(b.kind)) return tie_rank(a.kind) < tie_rank(b.kind);
    return a.seq < b.seq;
}

inline void sort_trace(std::vector<TraceEvent>& trace) { std::stable_sort(trace.begin(), trace.end(), trace_before); }

inline constexpr int kTraceFormatVersion = 1;
inline constexpr std::string_view kTraceHeader = "time_us,kind,lane,proc,app,task,detail";

/// Writes the trace as CSV: a `# format_version=N` line, the column header,
/// then one row per event. Unused id columns are empty.
inline void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace) {
    os << "# format_version=" << kTraceFormatVersion << '\n' << kTraceHeader << '\n';
    auto id = [&os](int v) {
        if (v >= 0) os << v;
        os << ',';
    };
    for (const auto& e : trace) {
        os << e.time.count() << ',' << to_string(e.kind) << ',';
        id(e.lane);
        id(e.proc);
        id(e.app);
        id(e.task);
        os << e.detail << '\n';
    }
}

inline std::string trace_to_string(const std::vector<TraceEvent>& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

/// Value of `key` in a detail string ("a=1;b=x"), if present.
inline std::optional<std::string> detail_field(std::string_view detail, std::string_view key) {
    std::size_t pos = 0;
    while (pos <= detail.size()) {
        const auto end = std::min(detail.find(';', pos), detail.size());
        const auto item = detail.substr(pos, end - pos);
        const auto eq = item.find('=');
        if (eq != std::string_view::npos && item.substr(0, eq) == key) return std::string(item.substr(eq + 1));
        pos = end + 1;
    }
    return std::nullopt;
}

/// Parses a trace written by write_trace. Throws std::runtime_error on
/// malformed rows.
inline std::vector<TraceEvent> read_trace(std::istream& is) {
    std::vector<TraceEvent> out;
    std::string line;
    std::uint64_t seq = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line == kTraceHeader) continue;
        std::vector<std::string> cols;
        std::size_t pos = 0;
        for (int i = 0; i < 6; ++i) {
            const auto c = line.find(',', pos);
            if (c == std::string::npos) throw std::runtime_error("malformed trace row: " + line);
            cols.push_back(line.substr(pos, c - pos));
            pos = c + 1;
        }
        cols.push_back(line.substr(pos));
        TraceEvent e;
        e.time = Duration{std::stoll(cols[0])};
        const auto kind = event_kind_from(cols[1]);
        if (!kind) throw std::runtime_error("unknown trace kind: " + cols[1]);
        e.kind = *kind;
        auto num = [](const std::string& s) { return s.empty() ? -1 : std::stoi(s); };
        e.lane = num(cols[2]);
        e.proc = num(cols[3]);
        e.app = num(cols[4]);
        e.task = num(cols[5]);
        e.detail = cols[6];
        e.seq = seq++;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ftsim
