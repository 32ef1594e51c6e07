/*
 * Copyright 2026 The ReliFusion Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RELIFUSION_CHECKPOINT_HPP
#define RELIFUSION_CHECKPOINT_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relifusion/tensor.hpp"

namespace relifusion::train {

// Versioned little-endian binary: magic "RFCK", u32 version, u32 block count,
// then per block: u32 name length, name bytes, u32 rank, u32 extents, float64
// payload.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Tensor*>>& params);

std::map<std::string, ad::Tensor> load_checkpoint(const std::string& path);

}  // namespace relifusion::train

#endif  // RELIFUSION_CHECKPOINT_HPP
