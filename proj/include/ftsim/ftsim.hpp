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

#include "ftsim/coverage.hpp"
#include "ftsim/engine.hpp"
#include "ftsim/error.hpp"
#include "ftsim/fault.hpp"
#include "ftsim/generate.hpp"
#include "ftsim/metrics.hpp"
#include "ftsim/model.hpp"
#include "ftsim/reconfig.hpp"
#include "ftsim/replica.hpp"
#include "ftsim/scenario.hpp"
#include "ftsim/scenario_io.hpp"
#include "ftsim/sched.hpp"
#include "ftsim/time.hpp"
#include "ftsim/timing.hpp"
#include "ftsim/trace.hpp"
