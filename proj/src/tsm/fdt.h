// Copyright 2026 The ACE-TSM Simulator Authors
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

#ifndef ACETSM_TSM_FDT_H_
#define ACETSM_TSM_FDT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common/bytes.h"
#include "common/status.h"

namespace acetsm::fdt {

inline constexpr uint32_t kMagic = 0xd00dfeed;
inline constexpr size_t kHeaderBytes = 40;
inline constexpr size_t kMaxBytes = 64 * 1024;
inline constexpr uint32_t kMaxCpus = 64;

struct Info {
  uint32_t total_size = 0;
  uint32_t cpu_count = 0;  // cpu@N nodes directly under /cpus
};

// Reads totalsize from a header. ParseError on bad magic or size.
Result<uint32_t> TotalSize(ByteSpan header);

// Structural validation of a flattened device tree blob.
Result<Info> Parse(ByteSpan blob);

struct Property {
  std::string name;
  Bytes value;
};

struct Node {
  std::string name;
  std::vector<Property> properties;
  std::vector<Node> children;

  Node& AddChild(std::string child_name);
  void AddString(std::string prop, std::string_view value);
  void AddU32(std::string prop, uint32_t value);
  void AddU64(std::string prop, uint64_t value);
};

Bytes Serialize(const Node& root);

// A small guest device tree with `cpus` harts and one memory node.
Bytes MinimalTree(uint32_t cpus, uint64_t memory_gpa, uint64_t memory_bytes);

}  // namespace acetsm::fdt

#endif  // ACETSM_TSM_FDT_H_
