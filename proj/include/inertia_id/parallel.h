// Copyright 2026 The inertia_id Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INERTIA_ID_PARALLEL_H_
#define INERTIA_ID_PARALLEL_H_

#include <functional>

namespace inertia_id {

// Worker count: INERTIA_ID_THREADS if set and positive, else the hardware
// concurrency (at least 1).
int DefaultThreadCount();

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
// Work is split into contiguous blocks, so results written by index are
// independent of the thread count. The first exception thrown is rethrown.
void ParallelFor(int n, const std::function<void(int)>& body, int threads = 0);

}  // namespace inertia_id

#endif  // INERTIA_ID_PARALLEL_H_
