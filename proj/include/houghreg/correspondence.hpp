// Copyright 2026 The houghreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace houghreg {

/// A putative match between point src_id of the source cloud and point dst_id
/// of the target cloud. similarity is recorded but not used for voting.
struct Correspondence {
  std::uint32_t src_id = 0;
  std::uint32_t dst_id = 0;
  float similarity = 0.0f;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

}  // namespace houghreg
