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

#include "tsm/fdt.h"

#include <cstring>
#include <map>

namespace acetsm::fdt {
namespace {

constexpr uint32_t kBeginNode = 1;
constexpr uint32_t kEndNode = 2;
constexpr uint32_t kProp = 3;
constexpr uint32_t kNop = 4;
constexpr uint32_t kEnd = 9;
constexpr uint32_t kVersion = 17;
constexpr uint32_t kLastCompatible = 16;

uint32_t Be32At(ByteSpan b, size_t off) {
  return static_cast<uint32_t>(b[off]) << 24 | static_cast<uint32_t>(b[off + 1]) << 16 |
         static_cast<uint32_t>(b[off + 2]) << 8 | b[off + 3];
}

void StoreBe32At(Bytes& b, size_t off, uint32_t v) {
  for (int i = 0; i < 4; ++i) b[off + i] = static_cast<uint8_t>(v >> (24 - 8 * i));
}

Status Bad(const std::string& what) {
  return MakeError(ErrorCode::kParseError, "fdt: " + what);
}

size_t Align4(size_t n) { return (n + 3) & ~size_t{3}; }

}  // namespace

Result<uint32_t> TotalSize(ByteSpan header) {
  if (header.size() < kHeaderBytes) return Bad("short header");
  if (Be32At(header, 0) != kMagic) return Bad("bad magic");
  const uint32_t total = Be32At(header, 4);
  if (total < kHeaderBytes || total > kMaxBytes) return Bad("bad totalsize");
  return total;
}

Result<Info> Parse(ByteSpan blob) {
  ACETSM_ASSIGN_OR_RETURN(uint32_t total, TotalSize(blob));
  if (total != blob.size()) return Bad("totalsize does not match blob");
  const uint32_t off_struct = Be32At(blob, 8);
  const uint32_t off_strings = Be32At(blob, 12);
  const uint32_t last_compatible = Be32At(blob, 24);
  const uint32_t size_strings = Be32At(blob, 32);
  const uint32_t size_struct = Be32At(blob, 36);
  if (last_compatible > kVersion) return Bad("incompatible version");
  if (off_struct % 4 != 0 || off_struct < kHeaderBytes ||
      uint64_t{off_struct} + size_struct > total ||
      uint64_t{off_strings} + size_strings > total || off_strings < kHeaderBytes) {
    return Bad("block out of range");
  }
  Info info{total, 0};
  std::vector<std::string> path;
  size_t pos = off_struct;
  const size_t end = off_struct + size_struct;
  bool finished = false;
  while (!finished) {
    if (pos + 4 > end) return Bad("structure block truncated");
    const uint32_t token = Be32At(blob, pos);
    pos += 4;
    switch (token) {
      case kBeginNode: {
        size_t n = pos;
        while (n < end && blob[n] != 0) ++n;
        if (n >= end) return Bad("unterminated node name");
        std::string name(reinterpret_cast<const char*>(&blob[pos]), n - pos);
        if (path.empty() != name.empty()) return Bad("bad node name");
        if (path.size() == 2 && path[1] == "cpus" && name.rfind("cpu@", 0) == 0) {
          ++info.cpu_count;
        }
        path.push_back(std::move(name));
        if (path.size() > 16) return Bad("tree too deep");
        pos = Align4(n + 1);
        break;
      }
      case kEndNode:
        if (path.empty()) return Bad("unbalanced end node");
        path.pop_back();
        break;
      case kProp: {
        if (path.empty()) return Bad("property outside node");
        if (pos + 8 > end) return Bad("property truncated");
        const uint32_t len = Be32At(blob, pos);
        const uint32_t name_off = Be32At(blob, pos + 4);
        if (name_off >= size_strings) return Bad("property name out of range");
        pos += 8;
        if (len > end - pos) return Bad("property value truncated");
        pos = Align4(pos + len);
        break;
      }
      case kNop:
        break;
      case kEnd:
        if (!path.empty()) return Bad("end inside node");
        finished = true;
        break;
      default:
        return Bad("unknown structure token");
    }
  }
  if (info.cpu_count > kMaxCpus) return Bad("too many cpus");
  return info;
}

Node& Node::AddChild(std::string child_name) {
  children.push_back(Node{std::move(child_name), {}, {}});
  return children.back();
}

void Node::AddString(std::string prop, std::string_view value) {
  Bytes v(value.begin(), value.end());
  v.push_back(0);
  properties.push_back({std::move(prop), std::move(v)});
}

void Node::AddU32(std::string prop, uint32_t value) {
  Bytes v;
  PutBe32(v, value);
  properties.push_back({std::move(prop), std::move(v)});
}

void Node::AddU64(std::string prop, uint64_t value) {
  Bytes v;
  PutBe64(v, value);
  properties.push_back({std::move(prop), std::move(v)});
}

namespace {

void Pad(Bytes& b) {
  while (b.size() % 4) b.push_back(0);
}

void Emit(const Node& node, Bytes& structure, Bytes& strings,
          std::map<std::string, uint32_t>& offsets) {
  PutBe32(structure, kBeginNode);
  structure.insert(structure.end(), node.name.begin(), node.name.end());
  structure.push_back(0);
  Pad(structure);
  for (const auto& prop : node.properties) {
    auto it = offsets.find(prop.name);
    if (it == offsets.end()) {
      it = offsets.emplace(prop.name, static_cast<uint32_t>(strings.size())).first;
      strings.insert(strings.end(), prop.name.begin(), prop.name.end());
      strings.push_back(0);
    }
    PutBe32(structure, kProp);
    PutBe32(structure, static_cast<uint32_t>(prop.value.size()));
    PutBe32(structure, it->second);
    structure.insert(structure.end(), prop.value.begin(), prop.value.end());
    Pad(structure);
  }
  for (const auto& child : node.children) Emit(child, structure, strings, offsets);
  PutBe32(structure, kEndNode);
}

}  // namespace

Bytes Serialize(const Node& root) {
  Bytes structure, strings;
  std::map<std::string, uint32_t> offsets;
  Emit(root, structure, strings, offsets);
  PutBe32(structure, kEnd);

  const uint32_t off_rsvmap = kHeaderBytes;
  const uint32_t off_struct = off_rsvmap + 16;  // one empty reservation entry
  const uint32_t off_strings = off_struct + structure.size();
  Bytes blob(off_struct, 0);
  blob.insert(blob.end(), structure.begin(), structure.end());
  blob.insert(blob.end(), strings.begin(), strings.end());
  Pad(blob);
  StoreBe32At(blob, 0, kMagic);
  StoreBe32At(blob, 4, static_cast<uint32_t>(blob.size()));
  StoreBe32At(blob, 8, off_struct);
  StoreBe32At(blob, 12, off_strings);
  StoreBe32At(blob, 16, off_rsvmap);
  StoreBe32At(blob, 20, kVersion);
  StoreBe32At(blob, 24, kLastCompatible);
  StoreBe32At(blob, 28, 0);
  StoreBe32At(blob, 32, static_cast<uint32_t>(strings.size()));
  StoreBe32At(blob, 36, static_cast<uint32_t>(structure.size()));
  return blob;
}

Bytes MinimalTree(uint32_t cpus, uint64_t memory_gpa, uint64_t memory_bytes) {
  Node root{"", {}, {}};
  root.AddU32("#address-cells", 2);
  root.AddU32("#size-cells", 2);
  root.AddString("compatible", "acetsm,virt");
  Node& cpu_list = root.AddChild("cpus");
  cpu_list.AddU32("#address-cells", 1);
  cpu_list.AddU32("#size-cells", 0);
  for (uint32_t i = 0; i < cpus; ++i) {
    Node& cpu = cpu_list.AddChild("cpu@" + std::to_string(i));
    cpu.AddString("device_type", "cpu");
    cpu.AddU32("reg", i);
    cpu.AddString("riscv,isa", "rv64imafdch");
  }
  char name[32];
  std::snprintf(name, sizeof(name), "memory@%llx",
                static_cast<unsigned long long>(memory_gpa));
  Node& memory = root.AddChild(name);
  memory.AddString("device_type", "memory");
  Bytes reg;
  PutBe64(reg, memory_gpa);
  PutBe64(reg, memory_bytes);
  memory.properties.push_back({"reg", std::move(reg)});
  return Serialize(root);
}

}  // namespace acetsm::fdt
