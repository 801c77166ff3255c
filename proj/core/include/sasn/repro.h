// Copyright (c) 2026 The SASN Authors
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

#ifndef SASN_REPRO_H_
#define SASN_REPRO_H_

#include <string>

namespace sasn {

/// Markdown tables derived from the code: parameter counts for
/// d_r in {5, 10, 20} (with and without TDNN biases) and TDNN output widths
/// for a few input lengths. Deterministic.
std::string emit_repro_tables();

}  // namespace sasn

#endif  // SASN_REPRO_H_
