/*
 * Copyright 2026 The Nephroscope Authors.
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

#ifndef NEPHROSCOPE_PARALLEL_H_
#define NEPHROSCOPE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace nephroscope {

// Number of worker threads used by ParallelFor. Returns 1 when the
// NEPHROSCOPE_NO_PARALLEL environment variable is set to "1".
size_t WorkerCount();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results into per-index slots so output never depends on scheduling.
// The first exception thrown by any body is rethrown on the calling thread.
void ParallelFor(size_t n, const std::function<void(size_t)>& body);

}  // namespace nephroscope

#endif  // NEPHROSCOPE_PARALLEL_H_
