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

#include "gstage/gstage.h"

namespace acetsm {
namespace {

using namespace gstage;  // NOLINT

constexpr uint64_t kReservedMask = ~(kPpnMask | kPermMask | kValid);

Status Malformed(const std::string& what, uint64_t table, uint64_t index) {
  char where[64];
  std::snprintf(where, sizeof(where), " (table 0x%llx entry %llu)",
                static_cast<unsigned long long>(table),
                static_cast<unsigned long long>(index));
  return MakeError(ErrorCode::kMalformedTable, what + where);
}

PageSize LeafSize(int level) { return static_cast<PageSize>(level); }

}  // namespace

std::string_view LeafKindName(LeafKind kind) {
  switch (kind) {
    case LeafKind::kMapped: return "mapped";
    case LeafKind::kLazyZero: return "lazy_zero";
    case LeafKind::kShared: return "shared";
  }
  return "?";
}

const TvmPageTables::Leaf* TvmPageTables::FindLeaf(uint64_t gpa,
                                                   uint64_t* leaf_base) const {
  auto it = leaves_.upper_bound(gpa);
  if (it == leaves_.begin()) return nullptr;
  --it;
  if (gpa - it->first >= PageBytes(it->second.size)) return nullptr;
  *leaf_base = it->first;
  return &it->second;
}

Result<Translation> TvmPageTables::Translate(uint64_t gpa) const {
  const uint64_t page = gpa & ~(kSmallPageBytes - 1);
  const uint64_t offset = gpa - page;
  if (auto it = shared_.find(page); it != shared_.end()) {
    return Translation{LeafKind::kShared, it->second + offset};
  }
  if (auto it = materialized_.find(page); it != materialized_.end()) {
    return Translation{LeafKind::kMapped, it->second + offset};
  }
  uint64_t base = 0;
  const Leaf* leaf = FindLeaf(gpa, &base);
  if (leaf == nullptr) {
    return MakeError(ErrorCode::kGuestFault, "unmapped guest address");
  }
  if (leaf->kind == LeafKind::kLazyZero) return Translation{LeafKind::kLazyZero, 0};
  return Translation{LeafKind::kMapped, leaf->host + (gpa - base)};
}

Result<uint64_t> TvmPageTables::MaterializeZeroPage(uint64_t gpa,
                                                    PageAllocator& allocator) {
  ACETSM_ASSIGN_OR_RETURN(Translation t, Translate(gpa));
  const uint64_t page = gpa & ~(kSmallPageBytes - 1);
  if (t.kind == LeafKind::kMapped) return t.address - (gpa - page);
  if (t.kind == LeafKind::kShared) {
    return MakeError(ErrorCode::kInvalidState, "shared page is not lazy");
  }
  ACETSM_ASSIGN_OR_RETURN(PageToken token, allocator.Allocate(PageSize::k4KiB));
  const uint64_t host = token.base();
  tokens_.push_back(std::move(token));
  materialized_[page] = host;
  return host;
}

Status TvmPageTables::AddShared(uint64_t gpa, const NonConfidentialAddress& npa) {
  if (gpa % kSmallPageBytes != 0 || npa.value() % kSmallPageBytes != 0) {
    return MakeError(ErrorCode::kInvalidParam, "shared page must be 4 KiB aligned");
  }
  if (gpa >> kGuestAddressBits != 0) {
    return MakeError(ErrorCode::kInvalidParam, "guest address out of range");
  }
  if (Translate(gpa).ok()) {
    return MakeError(ErrorCode::kAlreadyMapped, "guest page already mapped");
  }
  shared_[gpa] = npa.value();
  return Status::Ok();
}

Status TvmPageTables::Release(PageAllocator& allocator, Machine& machine) {
  Status first = Status::Ok();
  for (auto& token : tokens_) {
    Status s = allocator.Deallocate(std::move(token), machine);
    if (!s.ok() && first.ok()) first = s;
  }
  tokens_.clear();
  root_parts_.clear();
  leaves_.clear();
  materialized_.clear();
  shared_.clear();
  table_tokens_ = 0;
  return first;
}

std::vector<Interval> TvmPageTables::OwnedIntervals() const {
  std::vector<Interval> out;
  for (const auto& token : tokens_) out.push_back(token.interval());
  return out;
}

std::vector<Interval> TvmPageTables::MappedIntervals() const {
  std::vector<Interval> out;
  for (const auto& [base, leaf] : leaves_) {
    if (leaf.kind == LeafKind::kMapped) {
      out.push_back({leaf.host, leaf.host + PageBytes(leaf.size)});
    }
  }
  for (const auto& [page, host] : materialized_) {
    out.push_back({host, host + kSmallPageBytes});
  }
  return out;
}

uint64_t TvmPageTables::root_address() const {
  return root_parts_.empty() ? 0 : root_parts_.front();
}

TablesStats TvmPageTables::stats() const {
  TablesStats s;
  s.table_tokens = table_tokens_;
  s.data_tokens = tokens_.size() - table_tokens_ - materialized_.size();
  for (const auto& [base, leaf] : leaves_) {
    if (leaf.kind == LeafKind::kLazyZero) ++s.lazy_leaves;
  }
  s.materialized = materialized_.size();
  s.shared = shared_.size();
  return s;
}

TvmPageTables TvmPageTables::Clone(const MemoryLayout& layout) const {
  TvmPageTables copy;
  for (const auto& token : tokens_) {
    auto addr = layout.ValidateConfidential(token.base(), token.bytes());
    copy.tokens_.push_back(PageToken::ForgeForReplay(*addr, token.size()));
  }
  copy.root_parts_ = root_parts_;
  copy.leaves_ = leaves_;
  copy.materialized_ = materialized_;
  copy.shared_ = shared_;
  copy.table_tokens_ = table_tokens_;
  return copy;
}

Result<WalkResult> GStageWalker::WalkAndCopy(const NonConfidentialAddress& root) {
  WalkResult out;
  visited_.clear();
  measure_ = std::make_unique<CodeDataMeasurement>();
  Status status = Status::Ok();
  if (root.value() % kRootBytes != 0) {
    status = MakeError(ErrorCode::kMalformedTable, "root table not 16 KiB aligned");
  } else {
    auto walked = WalkTable(root.value(), kLevels - 1, 0, out);
    if (!walked.ok()) status = walked.status();
  }
  if (!status.ok()) {
    // Tokens were allocated moments ago by this walk; release cannot fail.
    (void)out.tables.Release(allocator_, machine_);
    measure_.reset();
    return status;
  }
  out.code_data = measure_->Finish();
  measure_.reset();
  return out;
}

Status GStageWalker::MarkVisited(uint64_t table, uint64_t bytes) {
  for (uint64_t page = table; page < table + bytes; page += kSmallPageBytes) {
    if (!visited_.insert(page).second) {
      return MakeError(ErrorCode::kMalformedTable,
                       "page table visited twice (loop or shared table)");
    }
  }
  return Status::Ok();
}

Result<uint64_t> GStageWalker::AllocateTable(int level, WalkResult& out) {
  TvmPageTables& t = out.tables;
  const int parts = level == kLevels - 1 ? static_cast<int>(kRootBytes / kTableBytes) : 1;
  uint64_t first = 0;
  for (int i = 0; i < parts; ++i) {
    ACETSM_ASSIGN_OR_RETURN(PageToken token, allocator_.Allocate(PageSize::k4KiB));
    if (i == 0) first = token.base();
    if (level == kLevels - 1) t.root_parts_.push_back(token.base());
    t.tokens_.push_back(std::move(token));
    ++t.table_tokens_;
  }
  return first;
}

// Returns the confidential address of the copy of `table`.
Result<uint64_t> GStageWalker::WalkTable(uint64_t table, int level,
                                         uint64_t gpa_base, WalkResult& out) {
  const bool root = level == kLevels - 1;
  const uint64_t entries = root ? kRootEntries : kTableEntries;
  const uint64_t bytes = entries * 8;
  ACETSM_RETURN_IF_ERROR(
      machine_.layout().ValidateNonConfidential(table, bytes).status());
  ACETSM_RETURN_IF_ERROR(MarkVisited(table, bytes));
  ACETSM_ASSIGN_OR_RETURN(Bytes raw, machine_.Read(DomainTag::Tsm(), table, bytes));

  const size_t copy_index = out.tables.tokens_.size();
  ACETSM_ASSIGN_OR_RETURN(uint64_t copy_first, AllocateTable(level, out));
  Bytes copy(bytes, 0);

  for (uint64_t i = 0; i < entries; ++i) {
    const uint64_t pte = LoadLe64(&raw[i * 8]);
    if (pte == 0) continue;
    if (!(pte & kValid)) return Malformed("invalid entry with stray bits", table, i);
    if (pte & kReservedMask) return Malformed("reserved bits set", table, i);
    const uint64_t gpa = gpa_base + (i << LevelShift(level));
    const uint64_t target = PteAddress(pte);
    uint64_t translated = 0;
    if (pte & kPermMask) {
      if ((pte & kWrite) && !(pte & kRead)) {
        return Malformed("write without read", table, i);
      }
      if (root) return Malformed("leaf in root table", table, i);
      const PageSize size = LeafSize(level);
      if (target % PageBytes(size) != 0) {
        return Malformed("misaligned leaf PPN", table, i);
      }
      ACETSM_RETURN_IF_ERROR(CopyLeaf(target, size, gpa, out));
      const auto& leaf = out.tables.leaves_.at(gpa);
      if (leaf.kind == LeafKind::kMapped) {
        translated = MakeLeaf(leaf.host, pte & kPermMask);
      }
    } else {
      if (level == 0) return Malformed("pointer at last level", table, i);
      ACETSM_ASSIGN_OR_RETURN(uint64_t child, WalkTable(target, level - 1, gpa, out));
      translated = MakePointer(child);
    }
    StoreLe64(&copy[i * 8], translated);
  }

  // Root copies span four separately allocated 4 KiB tokens.
  const auto& tokens = out.tables.tokens_;
  for (uint64_t part = 0; part < bytes / kTableBytes; ++part) {
    const uint64_t dest = tokens[copy_index + part].base();
    ByteSpan chunk = ByteSpan(copy).subspan(part * kTableBytes, kTableBytes);
    if (!AllZero(chunk)) {
      ACETSM_RETURN_IF_ERROR(machine_.Write(DomainTag::Tsm(), dest, chunk));
      out.tables.tokens_[copy_index + part].MarkCarrying();
    }
  }
  return copy_first;
}

Status GStageWalker::CopyLeaf(uint64_t source, PageSize size, uint64_t gpa_base,
                              WalkResult& out) {
  const uint64_t length = PageBytes(size);
  ACETSM_RETURN_IF_ERROR(
      machine_.layout().ValidateNonConfidential(source, length).status());
  const uint64_t pages = length / kSmallPageBytes;

  // Zero check first so all-zero leaves consume no token.
  bool zero = true;
  for (uint64_t p = 0; p < pages && zero; ++p) {
    ACETSM_ASSIGN_OR_RETURN(
        Bytes chunk, machine_.Read(DomainTag::Tsm(), source + p * kSmallPageBytes,
                                   kSmallPageBytes));
    zero = AllZero(chunk);
  }
  TvmPageTables& t = out.tables;
  if (zero) {
    t.leaves_[gpa_base] = {LeafKind::kLazyZero, size, 0};
    return Status::Ok();
  }
  ACETSM_ASSIGN_OR_RETURN(PageToken token, allocator_.Allocate(size));
  const uint64_t host = token.base();
  token.MarkCarrying();
  t.tokens_.push_back(std::move(token));
  t.leaves_[gpa_base] = {LeafKind::kMapped, size, host};
  for (uint64_t p = 0; p < pages; ++p) {
    const uint64_t offset = p * kSmallPageBytes;
    ACETSM_ASSIGN_OR_RETURN(
        Bytes chunk, machine_.Read(DomainTag::Tsm(), source + offset, kSmallPageBytes));
    if (AllZero(chunk)) continue;
    ACETSM_RETURN_IF_ERROR(machine_.Write(DomainTag::Tsm(), host + offset, chunk));
    const uint64_t gpn = (gpa_base + offset) >> 12;
    measure_->Add(gpn, chunk);
    out.measured_pages.push_back(gpn);
  }
  return Status::Ok();
}

}  // namespace acetsm
