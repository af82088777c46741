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
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ftsim/error.hpp"
#include "ftsim/timing.hpp"
#include "ftsim/time.hpp"

namespace ftsim {

struct JobRecord {
    TaskKey key;
    std::int64_t index = 0;  // release number since the task joined
    SimTime nominal{0};      // period boundary the job belongs to
    SimTime release{0};
    SimTime deadline{0};
    SimTime start = kNever;
    SimTime finish = kNever;
    bool missed = false;
    bool dropped = false;  // task removed before the job finished

    [[nodiscard]] bool done() const { return finish != kNever; }
};

struct Slice {
    TaskKey key;
    int background = -1;  // background job id, or -1 for a periodic job
    SimTime begin{0};
    SimTime end{0};
};

struct BackgroundJob {
    int id = 0;
    Duration work{0};
    SimTime submitted{0};
    std::optional<SimTime> finished;
};

/// Fixed-priority preemptive execution of one processor.
///
/// Periodic tasks release every period from their first release; the
/// released job with the highest deadline-monotonic priority always runs,
/// preempting at release instants. Background jobs run FIFO below every
/// periodic task, only when nothing periodic is runnable. Execution is
/// simulated lazily: callers advance the clock to the instant they care
/// about, and task-set changes take effect at the current clock.
class ProcessorSim {
public:
    explicit ProcessorSim(SimTime start = SimTime{0}, bool record_slices = true)
        : now_(start), record_slices_(record_slices) {}

    [[nodiscard]] SimTime now() const { return now_; }

    void add_task(const TaskKey& key, Duration wcet, Duration period, Duration deadline, SimTime first_release,
                  double exec_ratio = 1.0) {
        TaskEntry e;
        e.key = key;
        e.period = period;
        e.deadline = deadline;
        e.next_release = std::max(first_release, now_);
        e.first_release = e.next_release;
        e.exec = Duration{std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(static_cast<double>(wcet.count()) * exec_ratio)))};
        tasks_.push_back(std::move(e));
        std::stable_sort(tasks_.begin(), tasks_.end(), [](const TaskEntry& a, const TaskEntry& b) {
            if (a.deadline != b.deadline) return a.deadline < b.deadline;
            return a.key < b.key;
        });
    }

    /// Drops the task and its unfinished jobs. Dropped jobs are not misses.
    void remove_task(const TaskKey& key) {
        for (auto& e : tasks_)
            if (e.key == key) drop_pending(e);
        std::erase_if(tasks_, [&](const TaskEntry& e) { return e.key == key; });
    }

    [[nodiscard]] bool has_task(const TaskKey& key) const {
        return std::any_of(tasks_.begin(), tasks_.end(), [&](const TaskEntry& e) { return e.key == key; });
    }

    void add_background(int id, Duration work) {
        background_.push_back(BackgroundJob{id, work, now_, work.count() <= 0 ? std::optional{now_} : std::nullopt});
        bg_remaining_.push_back(work);
    }

    /// Removes every task and background job (processor shutdown).
    void clear() {
        for (auto& e : tasks_) drop_pending(e);
        tasks_.clear();
        for (std::size_t i = 0; i < background_.size(); ++i) bg_remaining_[i] = Duration{0};
    }

    /// Simulates [now, t).
    void advance_to(SimTime t) {
        while (now_ < t) {
            release_due();

            TaskEntry* run = nullptr;
            for (auto& e : tasks_)
                if (!e.queue.empty()) {
                    run = &e;
                    break;
                }
            std::size_t bg = background_.size();
            if (!run)
                for (std::size_t i = 0; i < background_.size(); ++i)
                    if (bg_remaining_[i].count() > 0) {
                        bg = i;
                        break;
                    }

            SimTime stop = t;
            for (const auto& e : tasks_) stop = std::min(stop, e.next_release);
            if (run) stop = std::min(stop, now_ + run->queue.front().remaining);
            else if (bg < background_.size()) stop = std::min(stop, now_ + bg_remaining_[bg]);

            if (run) {
                auto& pending = run->queue.front();
                auto& job = jobs_[pending.job];
                if (job.start == kNever) job.start = now_;
                pending.remaining -= stop - now_;
                add_slice(run->key, -1, now_, stop);
                if (pending.remaining.count() <= 0) {
                    job.finish = stop;
                    job.missed = stop > job.deadline;
                    ++completed_[run->key];
                    run->queue.pop_front();
                }
            } else if (bg < background_.size()) {
                bg_remaining_[bg] -= stop - now_;
                add_slice(TaskKey{}, background_[bg].id, now_, stop);
                if (bg_remaining_[bg].count() <= 0) background_[bg].finished = stop;
            }
            now_ = stop;
        }
    }

    /// Marks unfinished periodic jobs whose deadline has passed by `horizon`.
    void finalize(SimTime horizon) {
        advance_to(horizon);
        for (auto& j : jobs_)
            if (!j.done() && !j.dropped && j.deadline <= horizon) j.missed = true;
    }

    [[nodiscard]] std::optional<SimTime> background_finished(int id) const {
        for (const auto& b : background_)
            if (b.id == id) return b.finished;
        return std::nullopt;
    }

    [[nodiscard]] std::size_t completed_jobs(const TaskKey& key) const {
        auto it = completed_.find(key);
        return it == completed_.end() ? 0 : it->second;
    }

    [[nodiscard]] const std::vector<JobRecord>& jobs() const { return jobs_; }
    [[nodiscard]] const std::vector<Slice>& slices() const { return slices_; }
    [[nodiscard]] const std::vector<BackgroundJob>& background_jobs() const { return background_; }

    [[nodiscard]] std::vector<JobRecord> misses() const {
        std::vector<JobRecord> out;
        for (const auto& j : jobs_)
            if (j.missed) out.push_back(j);
        return out;
    }

private:
    struct Pending {
        std::size_t job = 0;
        Duration remaining{0};
    };
    struct TaskEntry {
        TaskKey key;
        Duration period{0};
        Duration deadline{0};
        Duration exec{0};
        SimTime first_release{0};
        SimTime next_release{0};
        std::int64_t next_index = 0;
        std::deque<Pending> queue;
    };

    void drop_pending(TaskEntry& e) {
        for (const auto& p : e.queue) jobs_[p.job].dropped = true;
        e.queue.clear();
    }

    void release_due() {
        for (auto& e : tasks_)
            while (e.next_release <= now_) {
                JobRecord j;
                j.key = e.key;
                j.index = e.next_index;
                j.nominal = e.first_release + e.period * e.next_index;
                j.release = e.next_release;
                j.deadline = e.next_release + e.deadline;
                jobs_.push_back(j);
                e.queue.push_back(Pending{jobs_.size() - 1, e.exec});
                ++e.next_index;
                e.next_release += e.period;
            }
    }

    void add_slice(const TaskKey& key, int bg, SimTime begin, SimTime end) {
        if (!record_slices_ || end <= begin) return;
        if (!slices_.empty()) {
            auto& last = slices_.back();
            if (last.end == begin && last.background == bg && last.key == key) {
                last.end = end;
                return;
            }
        }
        slices_.push_back(Slice{key, bg, begin, end});
    }

    SimTime now_;
    bool record_slices_;
    std::vector<TaskEntry> tasks_;
    std::vector<JobRecord> jobs_;
    std::vector<Slice> slices_;
    std::vector<BackgroundJob> background_;
    std::vector<Duration> bg_remaining_;
    std::map<TaskKey, std::size_t> completed_;
};

struct ScheduleResult {
    std::vector<Slice> slices;
    std::vector<JobRecord> jobs;
    std::vector<JobRecord> misses;
    std::optional<SimTime> background_finish;
};

/// Schedules a processor's admitted set over [0, window) with synchronous
/// release at 0, optionally with one background job of `background_work`
/// submitted at 0.
inline ScheduleResult schedule_processor(const ProcessorState& p, SimTime window,
                                         Duration background_work = Duration{0}, bool record_slices = true) {
    ProcessorSim sim(SimTime{0}, record_slices);
    for (const auto& t : p.tasks) sim.add_task(t.key, t.wcet, t.period, t.deadline, SimTime{0});
    if (background_work.count() > 0) sim.add_background(0, background_work);
    sim.finalize(window);
    ScheduleResult r;
    r.slices = sim.slices();
    r.jobs = sim.jobs();
    r.misses = sim.misses();
    if (background_work.count() > 0) r.background_finish = sim.background_finished(0);
    return r;
}

struct Jitter {
    Duration release{0};
    Duration input{0};
    Duration output{0};
    std::size_t instances = 0;
};

/// Release, input (first execution) and output (completion) jitter of one
/// task, as max - min of each instant's offset from its period boundary.
inline Jitter measure_jitter(std::span<const JobRecord> jobs, const TaskKey& key) {
    std::vector<const JobRecord*> mine;
    for (const auto& j : jobs)
        if (j.key == key && j.done()) mine.push_back(&j);
    if (mine.size() < 2) throw InsufficientInstances(mine.size());
    auto spread = [&](auto offset) {
        Duration lo = kNever, hi{std::numeric_limits<std::int64_t>::min()};
        for (const auto* j : mine) {
            const Duration v = offset(*j);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi - lo;
    };
    Jitter out;
    out.instances = mine.size();
    out.release = spread([](const JobRecord& j) { return j.release - j.nominal; });
    out.input = spread([](const JobRecord& j) { return j.start - j.nominal; });
    out.output = spread([](const JobRecord& j) { return j.finish - j.nominal; });
    return out;
}

/// Least common multiple of the periods, or `cap` if it would exceed it.
inline Duration hyperperiod(std::span<const AdmittedTask> tasks, Duration cap = kNever) {
    std::int64_t l = 1;
    for (const auto& t : tasks) {
        l = std::lcm(l, t.period.count());
        if (l > cap.count()) return cap;
    }
    return Duration{l};
}

}  // namespace ftsim
