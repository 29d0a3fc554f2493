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

#include "tsm/tsm.h"

#include <cstdio>

#include "tsm/fdt.h"

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

std::string DomainName(const DomainTag& tag) {
  return tag.is_tvm() ? "tvm" : "hyp";
}

}  // namespace

std::string FsmContext::FlowName() const {
  if (flow == Flow::kNonConfidential) return "nc";
  return "c:" + std::to_string(tvm) + "." + std::to_string(vhart);
}

GuestEvent GuestEvent::Ecall(uint64_t ext, uint64_t fid,
                             std::array<uint64_t, 6> args) {
  GuestEvent e;
  e.kind = Kind::kEcall;
  for (int i = 0; i < 6; ++i) e.regs[i] = args[i];
  e.regs[6] = fid;
  e.regs[7] = ext;
  return e;
}

GuestEvent GuestEvent::Load(uint64_t gpa, uint64_t len) {
  GuestEvent e;
  e.kind = Kind::kLoad;
  e.gpa = gpa;
  e.value = len;
  return e;
}

GuestEvent GuestEvent::Store(uint64_t gpa, Bytes data) {
  GuestEvent e;
  e.kind = Kind::kStore;
  e.gpa = gpa;
  e.data = std::move(data);
  return e;
}

GuestEvent GuestEvent::Tick(uint64_t ticks) {
  GuestEvent e;
  e.kind = Kind::kTick;
  e.value = ticks;
  return e;
}

GuestEvent GuestEvent::Irq(uint64_t irq) {
  GuestEvent e;
  e.kind = Kind::kIrq;
  e.value = irq;
  return e;
}

GuestEvent GuestEvent::Wfi() { return GuestEvent{}; }

void Tsm::WriteView::SetGpr(int index, uint64_t value) {
  state_.set_gpr(index, value);
  writes_.push_back(domain_ + ":" + std::string(GprName(index)));
}

void Tsm::WriteView::SetCsr(Csr csr, uint64_t value) {
  state_.set_csr(csr, value);
  writes_.push_back(domain_ + ":" + std::string(CsrName(csr)));
}

std::string Tsm::WriteView::Writes() const {
  if (writes_.empty()) return "-";
  std::string out;
  for (const auto& w : writes_) out += (out.empty() ? "" : ",") + w;
  return out;
}

// ---------------------------------------------------------------------------
// Construction and copies.

Tsm::Tsm(Machine machine, TsmOptions options)
    : options_(std::move(options)),
      machine_(std::move(machine)),
      allocator_(machine_.layout(), options_.allocator_max),
      key_(TsmAttestationKey::BuiltinSubset(options_.kems)) {}

Result<Tsm> Tsm::Boot(const MachineConfig& config, TsmOptions options) {
  for (KemAlgorithm alg : options.kems) {
    if (FindKemProvider(alg) == nullptr) {
      return MakeError(ErrorCode::kUnsupportedAlgorithm, "KEM not available");
    }
  }
  ACETSM_ASSIGN_OR_RETURN(Machine machine, Machine::Build(config));
  Tsm tsm(std::move(machine), std::move(options));
  for (uint32_t h = 0; h < tsm.machine_.hart_count(); ++h) {
    ACETSM_ASSIGN_OR_RETURN(PageToken area,
                            tsm.allocator_.Allocate(PageSize::k4KiB));
    FsmContext ctx;
    ctx.hart_id = h;
    ctx.hypervisor_area = area.base();
    tsm.contexts_.push_back(ctx);
    tsm.hypervisor_areas_.push_back(std::move(area));
    tsm.machine_.hart(h).regs.set_domain_tag(DomainTag::Hypervisor());
    tsm.Emit(h, "boot", "-", "ok",
             {{"area", Hex(tsm.contexts_[h].hypervisor_area)}});
  }
  return tsm;
}

Tsm::Tsm(const Tsm& other)
    : options_(other.options_),
      machine_(other.machine_),
      allocator_(other.allocator_),
      trace_(other.trace_),
      key_(other.key_),
      contexts_(other.contexts_),
      next_tvm_(other.next_tvm_),
      clock_(other.clock_),
      stats_(other.stats_) {
  const MemoryLayout& layout = machine_.layout();
  auto forge = [&](const PageToken& token) {
    return PageToken::ForgeForReplay(
        *layout.ValidateConfidential(token.base(), token.bytes()), token.size());
  };
  for (const auto& token : other.hypervisor_areas_) {
    hypervisor_areas_.push_back(forge(token));
  }
  for (const auto& [id, tvm] : other.tvms_) {
    TvmDescriptor copy;
    copy.id = tvm.id;
    copy.tables = tvm.tables.Clone(layout);
    for (const auto& token : tvm.tokens) copy.tokens.push_back(forge(token));
    copy.vharts = tvm.vharts;
    copy.measurements = tvm.measurements;
    copy.secrets = tvm.secrets;
    copy.allowed_interrupts = tvm.allowed_interrupts;
    copy.killed = tvm.killed;
    tvms_.emplace(id, std::move(copy));
  }
}

Tsm& Tsm::operator=(const Tsm& other) {
  if (this != &other) {
    Tsm copy(other);
    *this = std::move(copy);
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Trace and save-state areas.

void Tsm::Emit(uint32_t hart, std::string phase, std::string call,
               std::string result,
               std::vector<std::pair<std::string, std::string>> extras) {
  TraceEntry e;
  e.hart = hart;
  e.flow = contexts_.at(hart).FlowName();
  e.phase = std::move(phase);
  e.call = std::move(call);
  e.result = std::move(result);
  e.extras = std::move(extras);
  trace_.Append(std::move(e));
}

void Tsm::Mark(uint32_t hart, const std::string& label) {
  std::lock_guard lock(mu_.mu);
  if (hart < contexts_.size()) Emit(hart, "marker", label);
}

uint64_t Tsm::CurrentArea(uint32_t hart) const {
  const FsmContext& ctx = contexts_.at(hart);
  if (ctx.flow == Flow::kNonConfidential) return ctx.hypervisor_area;
  return tvms_.at(ctx.tvm).vharts.at(ctx.vhart).save_area;
}

HartArchState Tsm::LoadArea(uint64_t area, const DomainTag& tag) {
  auto raw = machine_.Read(DomainTag::Tsm(), area, HartArchState::kEncodedSize);
  HartArchState state = HartArchState::Decode(*raw).value();
  state.set_domain_tag(tag);
  return state;
}

void Tsm::StoreArea(uint64_t area, const HartArchState& state) {
  // Save-state areas live in confidential memory, never anywhere else.
  if (!machine_.layout().confidential().ContainsRange(area,
                                                      HartArchState::kEncodedSize)) {
    std::fprintf(stderr, "acetsm: save area 0x%llx outside confidential memory\n",
                 static_cast<unsigned long long>(area));
    std::abort();
  }
  (void)machine_.Write(DomainTag::Tsm(), area, state.Encode());
}

void Tsm::LightSave(uint32_t hart) {
  const uint64_t area = CurrentArea(hart);
  StoreArea(area, machine_.hart(hart).regs);
  Emit(hart, "save", "-", "-", {{"area", Hex(area)}});
}

void Tsm::LightRestore(uint32_t hart) {
  const uint64_t area = CurrentArea(hart);
  HartArchState& hw = machine_.hart(hart).regs;
  hw = LoadArea(area, hw.domain_tag());
  Emit(hart, "restore", "-", "-", {{"area", Hex(area)}});
}

Status Tsm::SecurityDomainSwitch(uint32_t hart, const DomainTag& target) {
  std::lock_guard lock(mu_.mu);
  if (hart >= contexts_.size()) return MakeError(ErrorCode::kInvalidParam, "hart");
  return SwitchLocked(hart, target);
}

Status Tsm::SwitchLocked(uint32_t hart, const DomainTag& target) {
  FsmContext& ctx = contexts_.at(hart);
  const bool to_tvm = target.is_tvm();
  if (to_tvm == (ctx.flow == Flow::kConfidential)) {
    return MakeError(ErrorCode::kInvalidState,
                     "domain switch must change security domain");
  }
  if (target.domain == Domain::kTsm) {
    return MakeError(ErrorCode::kInvalidParam, "the TSM is not a switch target");
  }
  VHart* entering = nullptr;
  if (to_tvm) {
    TvmDescriptor* tvm = FindTvm(target.tvm);
    if (tvm == nullptr || target.vhart >= tvm->vharts.size()) {
      return MakeError(ErrorCode::kNoSuchTvm, "switch target");
    }
    entering = &tvm->vharts[target.vhart];
  }
  const std::string from = ctx.FlowName();
  PhysicalHart& hw = machine_.hart(hart);

  // Full save of the outgoing domain.
  StoreArea(CurrentArea(hart), hw.regs);
  if (ctx.flow == Flow::kConfidential) {
    if (VHart* leaving = RunningVhart(hart)) leaving->running_on.reset();
  }
  if (to_tvm) {
    ctx.flow = Flow::kConfidential;
    ctx.tvm = target.tvm;
    ctx.vhart = target.vhart;
    entering->running_on = hart;
  } else {
    ctx.flow = Flow::kNonConfidential;
    ctx.tvm = ctx.vhart = 0;
  }
  // Load the incoming domain; the hart's accesses now carry its tag, which
  // re-points the region rules.
  hw.regs = LoadArea(CurrentArea(hart), target);
  // Clear simulated microarchitectural residue.
  hw.tlb.clear();
  hw.residue_clear = true;
  Emit(hart, "switch", "-", "-",
       {{"from", from},
        {"to", ctx.FlowName()},
        {"residue", hw.residue_clear && hw.tlb.empty() ? "clear" : "dirty"}});
  return Status::Ok();
}

// ---------------------------------------------------------------------------
// Dispatch.

CallResult Tsm::ReadHypervisorResult(uint32_t hart) {
  const HartArchState& regs = machine_.hart(hart).regs;
  CallResult r;
  r.error = static_cast<ErrorCode>(static_cast<int32_t>(static_cast<int64_t>(regs.a(0))));
  r.value = regs.a(1);
  r.detail = regs.a(2);
  return r;
}

CallResult Tsm::HypervisorCall(uint32_t hart, uint64_t ext, uint64_t fid,
                               std::array<uint64_t, 6> args) {
  std::lock_guard lock(mu_.mu);
  if (hart >= contexts_.size()) return {ErrorCode::kInvalidParam};
  const std::string name = abi::CallName(ext, fid);
  ++stats_.calls[name];
  if (contexts_[hart].flow != Flow::kNonConfidential) {
    // The hypervisor is not executing on this hart.
    Emit(hart, "trap", name, "-", {{"source", "hyp"}});
    Emit(hart, "reject", name, ResultName(ErrorCode::kFlowViolation));
    return {ErrorCode::kFlowViolation};
  }
  HartArchState& regs = machine_.hart(hart).regs;
  for (int i = 0; i < 6; ++i) regs.set_a(i, args[i]);
  regs.set_a(6, fid);
  regs.set_a(7, ext);
  return ProcessEcall(hart).value();
}

CallResult Tsm::InjectTvmEcall(uint32_t hart, uint64_t ext, uint64_t fid,
                               std::array<uint64_t, 6> args) {
  std::lock_guard lock(mu_.mu);
  if (hart >= contexts_.size()) return {ErrorCode::kInvalidParam};
  const std::string name = abi::CallName(ext, fid);
  ++stats_.calls[name];
  if (contexts_[hart].flow != Flow::kConfidential) {
    Emit(hart, "trap", name, "-", {{"source", "tvm"}});
    Emit(hart, "reject", name, ResultName(ErrorCode::kFlowViolation));
    return {ErrorCode::kFlowViolation};
  }
  auto exit = GuestStep(hart, GuestEvent::Ecall(ext, fid, args));
  if (!exit) exit = Pump(hart);
  if (exit) return *exit;
  CallResult running;
  running.running = true;
  return running;
}

std::optional<CallResult> Tsm::ProcessEcall(uint32_t hart) {
  HartArchState& hw = machine_.hart(hart).regs;
  const DomainTag caller = hw.domain_tag();
  const std::string name = abi::CallName(hw.a(7), hw.a(6));
  Emit(hart, "trap", name, "-", {{"source", DomainName(caller)}});
  LightSave(hart);

  // Constructor: read-only view of the caller's saved state.
  Request request;
  {
    const HartArchState view = LoadArea(CurrentArea(hart), caller);
    request.ext = view.a(7);
    request.fid = view.a(6);
    for (int i = 0; i < 6; ++i) request.args[i] = view.a(i);
    request.caller = caller;
  }
  Emit(hart, "route", name);
  Emit(hart, "ctor", name, "-", {{"view", "ro"}});

  Reply reply = Transform(hart, request);
  std::vector<std::pair<std::string, std::string>> extras;
  if (!reply.note.empty()) extras.emplace_back("note", reply.note);
  Emit(hart, "transform", name, ResultName(reply.error), std::move(extras));

  Destruct(hart, request, reply);
  return AfterHandler(hart, request, reply);
}

Tsm::Reply Tsm::Transform(uint32_t hart, const Request& request) {
  using namespace abi;  // NOLINT
  Reply denied;
  denied.error = ErrorCode::kDenied;
  Reply unknown;
  unknown.error = ErrorCode::kUnknownCall;

  if (!request.caller.is_tvm()) {
    if (request.ext != kExtTvm) return unknown;
    switch (request.fid) {
      case kPromote: return Promote(hart, request);
      case kRun: return Run(hart, request);
      case kDestroy: return Destroy(hart, request);
      case kSharePage:
      case kRetrieveSecret:
      case kAllowInterrupt:
        return denied;  // TVM-only calls
      default:
        return unknown;
    }
  }

  switch (request.ext) {
    case kExtTvm:
      switch (request.fid) {
        case kSharePage: return SharePage(request);
        case kRetrieveSecret: return RetrieveSecret(hart, request);
        case kAllowInterrupt: return AllowInterrupt(request);
        case kPromote:
        case kRun:
        case kDestroy:
          return denied;  // hypervisor-only calls
        default:
          return unknown;
      }
    case kExtHsm:
      switch (request.fid) {
        case kHartStart: return HartStart(hart, request);
        case kHartStop: return HartStop(hart, request);
        case kHartGetStatus: return HartStatus(request);
        case kHartSuspend: return HartSuspend(hart, request);
        default: return unknown;
      }
    case kExtIpi:
      return request.fid == kIpiSend ? SendIpi(request) : unknown;
    case kExtRfence:
      return request.fid <= kRfenceMaxFid ? RemoteFence(request) : unknown;
    case kExtTime:
      return request.fid == kTimeSetTimer ? SetTimer(request) : unknown;
    default: {
      // Not a TSM call: a hypercall for the hypervisor.
      Reply forward;
      forward.next = Continue::kExit;
      forward.exit = ExitReason::kGuestEcall;
      forward.reply_to_caller = false;
      forward.reclassify = true;
      forward.note = "hypercall";
      return forward;
    }
  }
}

void Tsm::Destruct(uint32_t hart, const Request& request, const Reply& reply) {
  const std::string name = abi::CallName(request.ext, request.fid);
  const uint64_t area = CurrentArea(hart);
  HartArchState state = LoadArea(area, request.caller);
  WriteView view(state, DomainName(request.caller));
  const bool entering = reply.error == ErrorCode::kOk &&
                        reply.next == Continue::kEnterTvm;
  if (reply.reply_to_caller && !entering) {
    if (reply.memory_write) {
      // Into the caller's own confidential page (retrieve_secret).
      (void)machine_.Write(DomainTag::Tsm(), reply.memory_write->first,
                           reply.memory_write->second);
      view.Note("mem@" + Hex(reply.memory_gpa));
    }
    if (reply.clear_ip != 0) {
      view.SetCsr(Csr::kIp, state.csr(Csr::kIp) & ~reply.clear_ip);
    }
    view.SetGpr(kRegA0, static_cast<uint64_t>(static_cast<int64_t>(reply.error)));
    view.SetGpr(kRegA0 + 1, reply.value);
  }
  StoreArea(area, state);
  Emit(hart, "dtor", name, ResultName(reply.error),
       {{"target", view.domain()}, {"writes", view.Writes()}});
}

std::optional<CallResult> Tsm::AfterHandler(uint32_t hart, const Request& request,
                                            const Reply& reply) {
  if (!request.caller.is_tvm()) {
    if (reply.error != ErrorCode::kOk || reply.next != Continue::kEnterTvm) {
      LightRestore(hart);
      return ReadHypervisorResult(hart);
    }
    // run: enter the TVM through the security domain switch.
    const uint32_t tvm_id = static_cast<uint32_t>(request.args[0]);
    const uint32_t vh = static_cast<uint32_t>(request.args[1]);
    (void)SwitchLocked(hart, DomainTag::Tvm(tvm_id, vh));
    TvmDescriptor& tvm = *FindTvm(tvm_id);
    VHart& vhart = tvm.vharts[vh];
    HartArchState& hw = machine_.hart(hart).regs;
    if (reply.hypercall_response) {
      WriteView view(hw, "tvm");
      view.SetGpr(kRegA0, reply.hypercall_response->first);
      view.SetGpr(kRegA0 + 1, reply.hypercall_response->second);
      Emit(hart, "dtor", "run", "ok",
           {{"target", "tvm"}, {"writes", view.Writes()}});
    }
    vhart.last_exit = abi::ExitReason::kNone;
    if (reply.inject_irq != 0) {
      const std::string irq = "irq:" + std::to_string(reply.inject_irq);
      if (tvm.allowed_interrupts.count(reply.inject_irq)) {
        hw.set_csr(Csr::kIp, hw.csr(Csr::kIp) | kExternalInterruptBit);
        hw.set_csr(Csr::kIrqId, reply.inject_irq);
        Emit(hart, "inject", irq, "ok");
      } else {
        Emit(hart, "filter_drop", irq, ResultName(ErrorCode::kDenied));
      }
    }
    EnterVhart(hart);
    if (auto exit = Pump(hart)) return exit;
    CallResult running;
    running.running = true;
    return running;
  }

  // TVM caller.
  if (reply.next == Continue::kExit) {
    if (reply.reply_to_caller) LightRestore(hart);
    return ExitToHypervisor(hart, reply.exit, reply.exit_detail, reply.reclassify);
  }
  LightRestore(hart);
  EnterVhart(hart);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hypervisor-facing handlers.

Tsm::Reply Tsm::Promote(uint32_t hart, const Request& request) {
  Reply reply;
  auto id = PromoteLocked(hart, request);
  if (!id.ok()) {
    reply.error = id.code();
    reply.note = id.status().message();
    for (char& c : reply.note) {
      if (c == ' ') c = '_';
    }
    return reply;
  }
  reply.value = *id;
  return reply;
}

Result<uint32_t> Tsm::PromoteLocked(uint32_t hart, const Request& request) {
  const MemoryLayout& layout = machine_.layout();
  const uint64_t boot_addr = request.args[0];
  const uint64_t root_addr = request.args[1];
  const uint64_t fdt_addr = request.args[2];
  const uint64_t tap_addr = request.args[3];
  const DomainTag tsm = DomainTag::Tsm();

  // Every hypervisor-provided address must be memory the hypervisor owns.
  ACETSM_ASSIGN_OR_RETURN(auto boot,
                          layout.ValidateNonConfidential(boot_addr, HartArchState::kEncodedSize));
  ACETSM_ASSIGN_OR_RETURN(auto root,
                          layout.ValidateNonConfidential(root_addr, gstage::kRootBytes));
  ACETSM_ASSIGN_OR_RETURN(auto fdt_header,
                          layout.ValidateNonConfidential(fdt_addr, fdt::kHeaderBytes));
  ACETSM_RETURN_IF_ERROR(layout.ValidateNonConfidential(tap_addr, 8).status());

  ACETSM_ASSIGN_OR_RETURN(Bytes boot_raw,
                          machine_.Read(tsm, boot.value(), HartArchState::kEncodedSize));
  ACETSM_ASSIGN_OR_RETURN(HartArchState boot_state, HartArchState::Decode(boot_raw));

  ACETSM_ASSIGN_OR_RETURN(Bytes header,
                          machine_.Read(tsm, fdt_header.value(), fdt::kHeaderBytes));
  ACETSM_ASSIGN_OR_RETURN(uint32_t fdt_size, fdt::TotalSize(header));
  ACETSM_ASSIGN_OR_RETURN(auto fdt_range, layout.ValidateNonConfidential(fdt_addr, fdt_size));
  ACETSM_ASSIGN_OR_RETURN(Bytes fdt_blob, machine_.Read(tsm, fdt_range.value(), fdt_size));
  ACETSM_ASSIGN_OR_RETURN(fdt::Info fdt_info, fdt::Parse(fdt_blob));
  if (fdt_info.cpu_count == 0) {
    return MakeError(ErrorCode::kInvalidParam, "device tree declares no harts");
  }

  GStageWalker walker(machine_, allocator_);
  ACETSM_ASSIGN_OR_RETURN(WalkResult walk, walker.WalkAndCopy(root));

  // From here on every failure must hand back what was acquired.
  std::vector<PageToken> tokens;
  auto fail = [&](Status status) -> Status {
    (void)walk.tables.Release(allocator_, machine_);
    for (auto& token : tokens) (void)allocator_.Deallocate(std::move(token), machine_);
    return status;
  };

  // Confidential copy of the device tree.
  for (uint64_t off = 0; off < fdt_size; off += kSmallPageBytes) {
    auto token = allocator_.Allocate(PageSize::k4KiB);
    if (!token.ok()) return fail(token.status());
    const uint64_t len = std::min<uint64_t>(kSmallPageBytes, fdt_size - off);
    (void)machine_.Write(tsm, token->base(), ByteSpan(fdt_blob).subspan(off, len));
    token->MarkCarrying();
    tokens.push_back(std::move(*token));
  }
  // One save-state area per vhart.
  std::vector<uint64_t> areas;
  for (uint32_t v = 0; v < fdt_info.cpu_count; ++v) {
    auto token = allocator_.Allocate(PageSize::k4KiB);
    if (!token.ok()) return fail(token.status());
    areas.push_back(token->base());
    tokens.push_back(std::move(*token));
  }

  MeasurementRegisters measured;
  measured.code_data = walk.code_data;
  measured.fdt = crypto::Sha384(fdt_blob);
  measured.boot_hart = MeasureBootHart(boot_state);

  TapFetch fetch = [&](uint64_t offset, size_t len) -> Result<Bytes> {
    if (offset > ~uint64_t{0} - tap_addr) {
      return MakeError(ErrorCode::kInvalidAddress, "tap wraps");
    }
    ACETSM_ASSIGN_OR_RETURN(auto chunk,
                            layout.ValidateNonConfidential(tap_addr + offset, len));
    return machine_.Read(tsm, chunk.value(), len);
  };
  auto blob = ParseTap(fetch);
  if (!blob.ok()) return fail(blob.status());
  auto payload = TapUnseal(*blob, key_);
  if (!payload.ok()) return fail(payload.status());
  auto secrets = VerifyLocalAttestation(measured, *payload);
  if (!secrets.ok()) return fail(secrets.status());

  // Commit.
  TvmDescriptor tvm;
  tvm.id = next_tvm_++;
  tvm.tables = std::move(walk.tables);
  tvm.tokens = std::move(tokens);
  tvm.measurements = measured;
  tvm.secrets = std::move(*secrets);
  for (uint32_t v = 0; v < fdt_info.cpu_count; ++v) {
    VHart vhart;
    vhart.id = v;
    vhart.save_area = areas[v];
    tvm.vharts.push_back(std::move(vhart));
  }
  // Only the boot hart is enabled.
  tvm.vharts[0].life.state = VHartState::kStarted;
  HartArchState boot_copy = boot_state;
  boot_copy.set_domain_tag(DomainTag::Tvm(tvm.id, 0));
  StoreArea(areas[0], boot_copy);
  for (uint32_t v = 1; v < fdt_info.cpu_count; ++v) {
    StoreArea(areas[v], HartArchState());
  }
  for (const Interval& range : tvm.tables.MappedIntervals()) {
    machine_.GrantTvm(tvm.id, range);
  }
  const uint32_t id = tvm.id;
  const size_t pages = walk.measured_pages.size();
  tvms_.emplace(id, std::move(tvm));
  Emit(hart, "lifecycle", "promote", "ok",
       {{"tvm", std::to_string(id)},
        {"state", "runnable"},
        {"vharts", std::to_string(fdt_info.cpu_count)},
        {"pages", std::to_string(pages)}});
  return id;
}

Tsm::Reply Tsm::Run(uint32_t hart, const Request& request) {
  Reply reply;
  const uint32_t tvm_id = static_cast<uint32_t>(request.args[0]);
  TvmDescriptor* tvm = FindTvm(tvm_id);
  if (tvm == nullptr || tvm->killed || request.args[0] > UINT32_MAX) {
    reply.error = ErrorCode::kNoSuchTvm;
    return reply;
  }
  if (request.args[1] >= tvm->vharts.size()) {
    reply.error = ErrorCode::kInvalidParam;
    return reply;
  }
  VHart& vhart = tvm->vharts[request.args[1]];
  if (vhart.running_on) {
    reply.error = ErrorCode::kTvmBusy;
    return reply;
  }
  switch (vhart.life.state) {
    case VHartState::kStopped:
      reply.error = ErrorCode::kHartNotStarted;
      return reply;
    case VHartState::kStartPending: {
      HartArchState fresh;
      fresh.set_csr(Csr::kPc, vhart.life.start_gpa);
      fresh.set_a(0, vhart.id);
      fresh.set_a(1, vhart.life.opaque);
      StoreArea(vhart.save_area, fresh);
      SetLifecycle(hart, vhart, *ApplyHsm(vhart.life.state, HsmOp::kActivate));
      break;
    }
    case VHartState::kSuspended:
      SetLifecycle(hart, vhart, *ApplyHsm(vhart.life.state, HsmOp::kResume));
      break;
    case VHartState::kStarted:
      break;
  }
  reply.next = Continue::kEnterTvm;
  reply.inject_irq = request.args[2];
  if (vhart.last_exit == abi::ExitReason::kGuestEcall) {
    reply.hypercall_response = std::make_pair(request.args[3], request.args[4]);
  }
  return reply;
}

Tsm::Reply Tsm::Destroy(uint32_t hart, const Request& request) {
  Reply reply;
  if (request.args[0] > UINT32_MAX) {
    reply.error = ErrorCode::kNoSuchTvm;
    return reply;
  }
  Status status = DestroyLocked(hart, static_cast<uint32_t>(request.args[0]));
  reply.error = status.code();
  return reply;
}

Status Tsm::DestroyLocked(uint32_t hart, uint32_t tvm_id) {
  auto it = tvms_.find(tvm_id);
  if (it == tvms_.end()) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  TvmDescriptor& tvm = it->second;
  for (const VHart& v : tvm.vharts) {
    if (v.running_on) return MakeError(ErrorCode::kTvmBusy, "vhart executing");
  }
  machine_.RevokeAllTvm(tvm_id);
  Status released = tvm.tables.Release(allocator_, machine_);
  for (auto& token : tvm.tokens) {
    Status s = allocator_.Deallocate(std::move(token), machine_);
    if (released.ok()) released = s;
  }
  for (auto& secret : tvm.secrets) crypto::SecureWipe(secret.value);
  tvms_.erase(it);
  Emit(hart, "lifecycle", "destroy", ResultName(released.code()),
       {{"tvm", std::to_string(tvm_id)}, {"state", "destroyed"}});
  return released;
}

// ---------------------------------------------------------------------------
// Observation.

TvmDescriptor* Tsm::FindTvm(uint32_t tvm) {
  auto it = tvms_.find(tvm);
  return it == tvms_.end() ? nullptr : &it->second;
}

const TvmDescriptor* Tsm::FindTvm(uint32_t tvm) const {
  auto it = tvms_.find(tvm);
  return it == tvms_.end() ? nullptr : &it->second;
}

VHart* Tsm::RunningVhart(uint32_t hart) {
  const FsmContext& ctx = contexts_.at(hart);
  if (ctx.flow != Flow::kConfidential) return nullptr;
  TvmDescriptor* tvm = FindTvm(ctx.tvm);
  return tvm ? &tvm->vharts.at(ctx.vhart) : nullptr;
}

FsmContext Tsm::context(uint32_t hart) const {
  std::lock_guard lock(mu_.mu);
  return contexts_.at(hart);
}

std::vector<uint32_t> Tsm::TvmIds() const {
  std::lock_guard lock(mu_.mu);
  std::vector<uint32_t> out;
  for (const auto& [id, tvm] : tvms_) out.push_back(id);
  return out;
}

bool Tsm::HasTvm(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  return FindTvm(tvm) != nullptr;
}

Result<VHart> Tsm::vhart_info(uint32_t tvm, uint32_t vhart) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  if (vhart >= d->vharts.size()) return MakeError(ErrorCode::kInvalidParam, "vhart");
  return d->vharts[vhart];
}

Result<VHartState> Tsm::vhart_state(uint32_t tvm, uint32_t vhart) const {
  ACETSM_ASSIGN_OR_RETURN(VHart v, vhart_info(tvm, vhart));
  return v.life.state;
}

Result<uint32_t> Tsm::vhart_count(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  return static_cast<uint32_t>(d->vharts.size());
}

Result<HartArchState> Tsm::vhart_registers(uint32_t tvm, uint32_t vhart) const {
  ACETSM_ASSIGN_OR_RETURN(VHart v, vhart_info(tvm, vhart));
  std::lock_guard lock(mu_.mu);
  if (v.running_on) return machine_.hart(*v.running_on).regs;
  auto raw = machine_.layout().confidential().ContainsRange(v.save_area, 1)
                 ? const_cast<Machine&>(machine_).Read(DomainTag::Tsm(), v.save_area,
                                                       HartArchState::kEncodedSize)
                 : Result<Bytes>(MakeError(ErrorCode::kFailed, "area"));
  if (!raw.ok()) return raw.status();
  return HartArchState::Decode(*raw);
}

Result<std::vector<Interval>> Tsm::TvmIntervals(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  std::vector<Interval> out = d->tables.OwnedIntervals();
  for (const auto& token : d->tokens) out.push_back(token.interval());
  return out;
}

Result<Translation> Tsm::TranslateGuest(uint32_t tvm, uint64_t gpa) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  return d->tables.Translate(gpa);
}

Result<MeasurementRegisters> Tsm::Measurements(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  return d->measurements;
}

Result<std::set<uint64_t>> Tsm::AllowedInterrupts(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  return d->allowed_interrupts;
}

Result<size_t> Tsm::SecretCount(uint32_t tvm) const {
  std::lock_guard lock(mu_.mu);
  const TvmDescriptor* d = FindTvm(tvm);
  if (d == nullptr) return MakeError(ErrorCode::kNoSuchTvm, "no such TVM");
  return d->secrets.size();
}

AbiStats Tsm::stats() const {
  std::lock_guard lock(mu_.mu);
  return stats_;
}

uint64_t Tsm::clock() const {
  std::lock_guard lock(mu_.mu);
  return clock_;
}

}  // namespace acetsm
