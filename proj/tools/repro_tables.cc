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

// Regenerates docs/repro_tables.md (or prints to stdout without an argument).

#include <fstream>
#include <iostream>

#include "sasn/repro.h"

int main(int argc, char** argv) {
  const std::string tables = sasn::emit_repro_tables();
  if (argc < 2) {
    std::cout << tables;
    return 0;
  }
  std::ofstream out(argv[1]);
  out << tables;
  if (!out) {
    std::cerr << "cannot write " << argv[1] << '\n';
    return 1;
  }
  return 0;
}
