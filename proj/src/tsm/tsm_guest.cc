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

// TVM-facing handlers and the confidential execution flow.

#include <cstdio>

#include "tsm/tsm.h"

namespace acetsm {
namespace {

std::string Hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string ResultName(ErrorCode code) {
  return code == ErrorCode::kOk ? "ok" : std::string(ErrorCodeName(code));
}

constexpr uint64_t kPageMask = kSmallPageBytes - 1;

}  // namespace

// ---------------------------------------------------------------------------
// TVM-facing handlers. The caller is always request.caller (a TVM tag).

Tsm::Reply Tsm::SharePage(const Request& request) {
  Reply reply;
  TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  const uint64_t gpa = request.args[0];
  const uint64_t npa = request.args[1];
  if ((gpa & kPageMask) != 0) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  auto shared = machine_.layout().ValidateNonConfidential(npa, kSmallPageBytes);
  if (!shared.ok() || (npa & kPageMask) != 0) {
    reply.error = ErrorCode::kInvalidAddress;
    return reply;
  }
  reply.error = tvm.tables.AddShared(gpa, *shared).code();
  return reply;
}

Tsm::Reply Tsm::RetrieveSecret(uint32_t hart, const Request& request) {
  Reply reply;
  TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  const uint64_t index = request.args[0];
  const uint64_t gpa = request.args[1];
  const uint64_t capacity = request.args[2];
  const TapSecret* secret = nullptr;
  for (const auto& s : tvm.secrets) {
    if (s.index == index) secret = &s;
  }
  if (secret == nullptr) {
    reply.error = ErrorCode::kNoSuchSecret;
    return reply;
  }
  const uint64_t len = secret->value.size();
  if (capacity < len || (gpa & kPageMask) + len > kSmallPageBytes) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  // The destination must be the TVM's own confidential memory.
  auto where = tvm.tables.Translate(gpa);
  if (!where.ok() || where->kind == LeafKind::kShared) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  uint64_t host = where->address;
  if (where->kind == LeafKind::kLazyZero) {
    auto page = tvm.tables.MaterializeZeroPage(gpa, allocator_);
    if (!page.ok()) {
      reply.error = page.code();
      return reply;
    }
    machine_.GrantTvm(tvm.id, {*page, *page + kSmallPageBytes});
    host = *page + (gpa & kPageMask);
  }
  (void)hart;
  reply.memory_write = std::make_pair(host, secret->value);
  reply.memory_gpa = gpa;
  reply.value = len;
  return reply;
}

Tsm::Reply Tsm::AllowInterrupt(const Request& request) {
  Reply reply;
  if (request.args[0] == 0) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  FindTvm(request.caller.tvm)->allowed_interrupts.insert(request.args[0]);
  return reply;
}

Tsm::Reply Tsm::HartStart(uint32_t hart, const Request& request) {
  Reply reply;
  TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  const uint64_t target = request.args[0];
  if (target >= tvm.vharts.size() || !tvm.tables.Translate(request.args[1]).ok()) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  VHart& vhart = tvm.vharts[target];
  auto next = ApplyHsm(vhart.life.state, HsmOp::kStart);
  if (!next.ok()) {
    reply.error = next.code();
    return reply;
  }
  vhart.life.start_gpa = request.args[1];
  vhart.life.opaque = request.args[2];
  SetLifecycle(hart, vhart, *next);
  // The hypervisor must schedule the new vhart.
  reply.next = Continue::kExit;
  reply.exit = abi::ExitReason::kHartStart;
  reply.exit_detail = target;
  return reply;
}

Tsm::Reply Tsm::HartStop(uint32_t hart, const Request& request) {
  Reply reply;
  VHart& vhart = FindTvm(request.caller.tvm)->vharts.at(request.caller.vhart);
  auto next = ApplyHsm(vhart.life.state, HsmOp::kStop);
  if (!next.ok()) {
    reply.error = next.code();
    return reply;
  }
  SetLifecycle(hart, vhart, *next);
  reply.next = Continue::kExit;
  reply.exit = abi::ExitReason::kHartStop;
  reply.exit_detail = vhart.id;
  return reply;
}

Tsm::Reply Tsm::HartSuspend(uint32_t hart, const Request& request) {
  Reply reply;
  VHart& vhart = FindTvm(request.caller.tvm)->vharts.at(request.caller.vhart);
  auto next = ApplyHsm(vhart.life.state, HsmOp::kSuspend);
  if (!next.ok()) {
    reply.error = next.code();
    return reply;
  }
  SetLifecycle(hart, vhart, *next);
  reply.next = Continue::kExit;
  reply.exit = abi::ExitReason::kHartSuspend;
  reply.exit_detail = vhart.id;
  return reply;
}

Tsm::Reply Tsm::HartStatus(const Request& request) {
  Reply reply;
  const TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  if (request.args[0] >= tvm.vharts.size()) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  reply.value = static_cast<uint64_t>(tvm.vharts[request.args[0]].life.state);
  return reply;
}

Tsm::Reply Tsm::SendIpi(const Request& request) {
  Reply reply;
  TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  auto targets = ResolveHartMask(request.args[0], request.args[1],
                                 static_cast<uint32_t>(tvm.vharts.size()));
  if (!targets.ok()) {
    reply.error = targets.code();
    return reply;
  }
  for (VHart& v : tvm.vharts) {
    if (*targets & (uint64_t{1} << v.id)) {
      ++v.pending_ipis;
      ++v.ipis_received;
    }
  }
  DeliverToRunning(tvm, request.caller.vhart);
  return reply;
}

Tsm::Reply Tsm::RemoteFence(const Request& request) {
  Reply reply;
  TvmDescriptor& tvm = *FindTvm(request.caller.tvm);
  auto targets = ResolveHartMask(request.args[0], request.args[1],
                                 static_cast<uint32_t>(tvm.vharts.size()));
  if (!targets.ok()) {
    reply.error = targets.code();
    return reply;
  }
  for (VHart& v : tvm.vharts) {
    if (*targets & (uint64_t{1} << v.id)) v.fence_pending = true;
  }
  DeliverToRunning(tvm, request.caller.vhart);
  return reply;
}

Tsm::Reply Tsm::SetTimer(const Request& request) {
  Reply reply;
  VHart& vhart = FindTvm(request.caller.tvm)->vharts.at(request.caller.vhart);
  vhart.timer.deadline = request.args[0];
  vhart.timer.disclosed = request.args[0];
  reply.clear_ip = kTimerInterruptBit;
  return reply;
}

// ---------------------------------------------------------------------------
// Confidential flow.

// Targets executing on other harts take IPIs and fences immediately; the
// caller takes its own when it resumes, everyone else at their next entry.
void Tsm::DeliverToRunning(const TvmDescriptor& tvm, uint32_t caller) {
  for (const VHart& v : tvm.vharts) {
    if (v.id != caller && v.running_on) EnterVhart(*v.running_on);
  }
}

void Tsm::SetLifecycle(uint32_t hart, VHart& vhart, VHartState to) {
  Emit(hart, "hsm", "-", "ok",
       {{"vhart", std::to_string(vhart.id)},
        {"from", std::string(VHartStateName(vhart.life.state))},
        {"to", std::string(VHartStateName(to))}});
  vhart.life.state = to;
}

void Tsm::EnterVhart(uint32_t hart) {
  VHart* vhart = RunningVhart(hart);
  if (vhart == nullptr) return;
  PhysicalHart& hw = machine_.hart(hart);
  if (vhart->fence_pending) {
    vhart->fence_pending = false;
    ++vhart->fences_applied;
    hw.tlb.clear();
    Emit(hart, "fence", "-", "ok");
  }
  if (vhart->pending_ipis != 0) {
    const uint32_t count = vhart->pending_ipis;
    vhart->pending_ipis = 0;
    vhart->ipis_delivered += count;
    hw.regs.set_csr(Csr::kIp, hw.regs.csr(Csr::kIp) | kSoftwareInterruptBit);
    Emit(hart, "deliver", "ipi", "ok", {{"count", std::to_string(count)}});
  }
  CheckTimer(hart);
}

void Tsm::CheckTimer(uint32_t hart) {
  VHart* vhart = RunningVhart(hart);
  if (vhart == nullptr || vhart->timer.deadline == kNoDeadline ||
      clock_ < vhart->timer.deadline) {
    return;
  }
  vhart->timer.deadline = kNoDeadline;
  ++vhart->timers_fired;
  HartArchState& regs = machine_.hart(hart).regs;
  regs.set_csr(Csr::kIp, regs.csr(Csr::kIp) | kTimerInterruptBit);
  Emit(hart, "deliver", "timer", "ok", {{"clock", std::to_string(clock_)}});
}

std::optional<CallResult> Tsm::Pump(uint32_t hart) {
  while (true) {
    VHart* vhart = RunningVhart(hart);
    if (vhart == nullptr || vhart->queue.empty()) return std::nullopt;
    GuestEvent event = std::move(vhart->queue.front());
    vhart->queue.pop_front();
    if (auto exit = GuestStep(hart, event)) return exit;
  }
}

std::optional<CallResult> Tsm::GuestStep(uint32_t hart, const GuestEvent& event) {
  using Kind = GuestEvent::Kind;
  switch (event.kind) {
    case Kind::kEcall: {
      HartArchState& regs = machine_.hart(hart).regs;
      for (int i = 0; i < 8; ++i) regs.set_a(i, event.regs[i]);
      return ProcessEcall(hart);
    }
    case Kind::kLoad:
    case Kind::kStore:
      return GuestAccess(hart, event);
    case Kind::kTick:
      clock_ += event.value;
      for (uint32_t h = 0; h < contexts_.size(); ++h) CheckTimer(h);
      return std::nullopt;
    case Kind::kIrq:
      return ExitToHypervisor(hart, abi::ExitReason::kExternalInterrupt,
                              event.value, false);
    case Kind::kWfi:
      return ExitToHypervisor(hart, abi::ExitReason::kWfi, 0, false);
  }
  return std::nullopt;
}

std::optional<CallResult> Tsm::GuestAccess(uint32_t hart, const GuestEvent& event) {
  const FsmContext ctx = contexts_.at(hart);
  TvmDescriptor& tvm = *FindTvm(ctx.tvm);
  const bool load = event.kind == GuestEvent::Kind::kLoad;
  const uint64_t gpa = event.gpa;
  const uint64_t len = load ? event.value : event.data.size();
  const std::string op = load ? "load" : "store";
  if (len == 0 || (gpa & kPageMask) + len > kSmallPageBytes) {
    return ExitToHypervisor(hart, abi::ExitReason::kGuestPageFault, gpa, false);
  }
  auto where = tvm.tables.Translate(gpa);
  if (!where.ok()) {
    return ExitToHypervisor(hart, abi::ExitReason::kGuestPageFault, gpa, false);
  }
  uint64_t host = where->address;
  if (where->kind == LeafKind::kLazyZero) {
    // First touch of a zero page: the TSM backs it with confidential memory.
    Emit(hart, "trap", "page_fault", "-", {{"source", "tvm"}, {"gpa", Hex(gpa)}});
    Emit(hart, "route", "page_fault");
    auto page = tvm.tables.MaterializeZeroPage(gpa, allocator_);
    Emit(hart, "transform", "page_fault", ResultName(page.code()));
    if (!page.ok()) {
      tvm.killed = true;
      const uint32_t tvm_id = tvm.id;
      CallResult exit =
          ExitToHypervisor(hart, abi::ExitReason::kTvmKilled, gpa, false);
      bool running = false;
      for (const VHart& v : FindTvm(tvm_id)->vharts) running |= v.running_on.has_value();
      if (!running) (void)DestroyLocked(hart, tvm_id);
      return exit;
    }
    machine_.GrantTvm(tvm.id, {*page, *page + kSmallPageBytes});
    host = *page + (gpa & kPageMask);
  }
  PhysicalHart& hw = machine_.hart(hart);
  const DomainTag tag = hw.regs.domain_tag();
  hw.residue_clear = false;
  hw.tlb.insert(gpa & ~kPageMask);
  if (load) {
    auto bytes = machine_.Read(tag, host, len);
    if (!bytes.ok()) {
      return ExitToHypervisor(hart, abi::ExitReason::kGuestPageFault, gpa, false);
    }
    RunningVhart(hart)->last_load = std::move(*bytes);
  } else if (!machine_.Write(tag, host, event.data).ok()) {
    return ExitToHypervisor(hart, abi::ExitReason::kGuestPageFault, gpa, false);
  }
  Emit(hart, "guest", op, "ok", {{"gpa", Hex(gpa)}, {"len", std::to_string(len)}});
  return std::nullopt;
}

CallResult Tsm::ExitToHypervisor(uint32_t hart, abi::ExitReason reason,
                                 uint64_t detail, bool reclassify_args) {
  VHart& vhart = *RunningVhart(hart);
  const std::string name(abi::ExitReasonName(reason));
  Emit(hart, "exit", name, "-", {{"detail", Hex(detail)}});
  vhart.last_exit = reason;

  // Reclassification: the only TVM values the hypervisor ever sees.
  const HartArchState& tvm_regs = machine_.hart(hart).regs;
  const uint64_t hyp_area = contexts_.at(hart).hypervisor_area;
  HartArchState hyp = LoadArea(hyp_area, DomainTag::Hypervisor());
  WriteView view(hyp, "hyp");
  view.SetGpr(kRegA0, 0);
  view.SetGpr(kRegA0 + 1, static_cast<uint64_t>(reason));
  view.SetGpr(kRegA0 + 2, detail);
  view.SetCsr(Csr::kCause, static_cast<uint64_t>(reason));
  view.SetCsr(Csr::kTval, detail);
  view.SetCsr(Csr::kTimerDisclosure, vhart.timer.disclosed);
  if (reclassify_args) {
    for (int i = 0; i < 8; ++i) {
      view.SetGpr(abi::kReclassifyBase + i, tvm_regs.a(i));
    }
  }
  StoreArea(hyp_area, hyp);
  Emit(hart, "dtor", name, "ok", {{"target", "hyp"}, {"writes", view.Writes()}});

  (void)SwitchLocked(hart, DomainTag::Hypervisor());
  if (vhart.life.state == VHartState::kStopped) {
    // A stopped vhart restarts from a clean state.
    StoreArea(vhart.save_area, HartArchState());
    vhart.queue.clear();
  }
  CallResult result;
  result.value = static_cast<uint64_t>(reason);
  result.detail = detail;
  result.exit = reason;
  return result;
}

// ---------------------------------------------------------------------------
// External stimuli.

void Tsm::ExternalInterrupt(uint32_t hart, uint64_t irq) {
  std::lock_guard lock(mu_.mu);
  if (hart >= contexts_.size()) return;
  const std::string name = "irq:" + std::to_string(irq);
  if (contexts_[hart].flow == Flow::kNonConfidential) {
    Emit(hart, "passthrough", name, "ok");
    return;
  }
  (void)ExitToHypervisor(hart, abi::ExitReason::kExternalInterrupt, irq, false);
}

Result<std::optional<CallResult>> Tsm::QueueGuestEvent(uint32_t tvm, uint32_t vhart,
                                                       GuestEvent event) {
  std::lock_guard lock(mu_.mu);
  TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  if (vhart >= d->vharts.size()) return MakeError(ErrorCode::kInvalidParam, "vhart");
  VHart& v = d->vharts[vhart];
  v.queue.push_back(std::move(event));
  if (!v.running_on) return std::optional<CallResult>();
  return Pump(*v.running_on);
}

void Tsm::ClearGuestQueue(uint32_t tvm, uint32_t vhart) {
  std::lock_guard lock(mu_.mu);
  TvmDescriptor* d = FindTvm(tvm);
  if (d != nullptr && vhart < d->vharts.size()) d->vharts[vhart].queue.clear();
}

void Tsm::AdvanceClock(uint64_t ticks) {
  std::lock_guard lock(mu_.mu);
  clock_ += ticks;
  for (uint32_t h = 0; h < contexts_.size(); ++h) CheckTimer(h);
}

}  // namespace acetsm
