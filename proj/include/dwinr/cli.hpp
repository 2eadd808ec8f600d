/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 dwinr contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
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

#include <cstdint>
#include <string>

#include "dwinr/config.hpp"
#include "dwinr/simulator.hpp"

namespace dwinr::cli {

/// Entry point of the dwinr tool. Returns the process exit code (2 for usage errors).
int cli_main(int argc, char** argv);

/// Independent seed for frame `index` and stream `stream` (0 = phantom, 1 = noise).
std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Phantom for frame `index` of a simulated dataset.
sim::Phantom make_frame_phantom(const config::RunConfig& cfg, std::uint64_t seed, std::size_t index);

/// Keeps freed training buffers in the heap instead of returning them to the OS (glibc only).
void tune_allocator();

/// Parses "WxH".
std::pair<std::size_t, std::size_t> parse_grid(const std::string& text);

}  // namespace dwinr::cli
