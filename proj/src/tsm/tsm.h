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

#ifndef ACETSM_TSM_TSM_H_
#define ACETSM_TSM_TSM_H_

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "allocator/page_allocator.h"
#include "attestation/kem.h"
#include "attestation/measurement.h"
#include "attestation/tap.h"
#include "gstage/gstage.h"
#include "hsm/hsm.h"
#include "machine/machine.h"
#include "tsm/abi.h"
#include "tsm/trace.h"

namespace acetsm {

enum class Flow { kNonConfidential, kConfidential };

// Per physical hart.
struct FsmContext {
  uint32_t hart_id = 0;
  Flow flow = Flow::kNonConfidential;
  uint32_t tvm = 0;
  uint32_t vhart = 0;
  uint64_t hypervisor_area = 0;  // confidential save-state area
  std::string FlowName() const;
};

// Scripted guest behaviour consumed while a vhart runs.
struct GuestEvent {
  enum class Kind { kEcall, kLoad, kStore, kTick, kIrq, kWfi };
  Kind kind = Kind::kWfi;
  std::array<uint64_t, 8> regs{};  // ecall: a0..a7 (a7 ext, a6 fid)
  uint64_t gpa = 0;
  uint64_t value = 0;  // load length, tick count or irq id
  Bytes data;          // store payload

  static GuestEvent Ecall(uint64_t ext, uint64_t fid,
                          std::array<uint64_t, 6> args = {});
  static GuestEvent Load(uint64_t gpa, uint64_t len);
  static GuestEvent Store(uint64_t gpa, Bytes data);
  static GuestEvent Tick(uint64_t ticks);
  static GuestEvent Irq(uint64_t irq);
  static GuestEvent Wfi();
};

struct VHart {
  uint32_t id = 0;
  VHartLifecycle life;
  uint64_t save_area = 0;
  TimerState timer;
  uint32_t pending_ipis = 0;
  bool fence_pending = false;
  std::optional<uint32_t> running_on;
  abi::ExitReason last_exit = abi::ExitReason::kNone;
  std::deque<GuestEvent> queue;
  Bytes last_load;
  // Counting oracle support.
  uint64_t ipis_received = 0;
  uint64_t ipis_delivered = 0;
  uint64_t fences_applied = 0;
  uint64_t timers_fired = 0;
};

struct TvmDescriptor {
  uint32_t id = 0;
  TvmPageTables tables;
  std::vector<PageToken> tokens;  // FDT copy and vhart save areas
  std::vector<VHart> vharts;
  MeasurementRegisters measurements;
  std::vector<TapSecret> secrets;
  std::set<uint64_t> allowed_interrupts;
  bool killed = false;
};

struct TsmOptions {
  std::vector<KemAlgorithm> kems = AvailableKems();
  PageSize allocator_max = PageSize::k1GiB;
};

// Outcome of a hypervisor ecall as the hypervisor observes it.
struct CallResult {
  ErrorCode error = ErrorCode::kOk;
  uint64_t value = 0;   // a1
  uint64_t detail = 0;  // a2 (run: exit detail)
  // run only: the TVM is still executing on this hart (its script ran dry).
  bool running = false;
  abi::ExitReason exit = abi::ExitReason::kNone;
};

struct AbiStats {
  std::map<std::string, uint64_t> calls;  // by call name, all sources
};

class Tsm {
 public:
  static Result<Tsm> Boot(const MachineConfig& config, TsmOptions options = {});

  // Deep copy, used for snapshots during exhaustive exploration.
  Tsm(const Tsm& other);
  Tsm& operator=(const Tsm& other);
  Tsm(Tsm&& other) = default;
  Tsm& operator=(Tsm&& other) = default;
  ~Tsm() = default;

  // The hypervisor on `hart` issues ecall(ext, fid, a0..a5).
  CallResult HypervisorCall(uint32_t hart, uint64_t ext, uint64_t fid,
                            std::array<uint64_t, 6> args = {});

  // An ecall that claims to come from a TVM on `hart`. In confidential flow it
  // behaves like a scripted guest ecall; otherwise it is a flow violation.
  CallResult InjectTvmEcall(uint32_t hart, uint64_t ext, uint64_t fid,
                            std::array<uint64_t, 6> args = {});

  // External interrupt line raised on a physical hart.
  void ExternalInterrupt(uint32_t hart, uint64_t irq);

  // Queues guest behaviour; if the vhart is executing it is consumed now.
  // Returns the exit taken, if any, for the hart executing it.
  Result<std::optional<CallResult>> QueueGuestEvent(uint32_t tvm, uint32_t vhart,
                                                    GuestEvent event);
  void ClearGuestQueue(uint32_t tvm, uint32_t vhart);

  void AdvanceClock(uint64_t ticks);
  uint64_t clock() const;

  // Lifecycle entry points used by tests of the phase machinery.
  Status SecurityDomainSwitch(uint32_t hart, const DomainTag& target);

  // Observation. Not synchronized with concurrent ecalls.
  Machine& machine() { return machine_; }
  const Machine& machine() const { return machine_; }
  PageAllocator& allocator() { return allocator_; }
  const PageAllocator& allocator() const { return allocator_; }
  TraceLog& trace() { return trace_; }
  const TraceLog& trace() const { return trace_; }
  const TsmAttestationKey& attestation_key() const { return key_; }
  FsmContext context(uint32_t hart) const;
  std::vector<uint32_t> TvmIds() const;
  bool HasTvm(uint32_t tvm) const;
  Result<VHartState> vhart_state(uint32_t tvm, uint32_t vhart) const;
  Result<VHart> vhart_info(uint32_t tvm, uint32_t vhart) const;
  Result<HartArchState> vhart_registers(uint32_t tvm, uint32_t vhart) const;
  Result<uint32_t> vhart_count(uint32_t tvm) const;
  Result<std::vector<Interval>> TvmIntervals(uint32_t tvm) const;
  Result<Translation> TranslateGuest(uint32_t tvm, uint64_t gpa) const;
  Result<MeasurementRegisters> Measurements(uint32_t tvm) const;
  Result<std::set<uint64_t>> AllowedInterrupts(uint32_t tvm) const;
  Result<size_t> SecretCount(uint32_t tvm) const;
  AbiStats stats() const;

  // Runs fn(machine, allocator) serialized with every ecall. Used by the
  // hypervisor side of scenarios and by test hooks.
  template <typename F>
  auto WithLock(F&& fn) {
    std::lock_guard lock(mu_.mu);
    return fn(machine_, allocator_);
  }

  // Emits a scenario-level marker into the trace.
  void Mark(uint32_t hart, const std::string& label);

 private:
  // Fresh mutex on copy; the copy has no waiters.
  struct Mutex {
    std::mutex mu;
    Mutex() = default;
    Mutex(const Mutex&) {}
    Mutex& operator=(const Mutex&) { return *this; }
  };

  // A request as seen by a handler constructor: arguments only, read from the
  // caller's saved state through a const view.
  struct Request {
    uint64_t ext = 0;
    uint64_t fid = 0;
    std::array<uint64_t, 6> args{};
    DomainTag caller;
  };
  enum class Continue { kReturn, kEnterTvm, kExit };
  struct Reply {
    ErrorCode error = ErrorCode::kOk;
    uint64_t value = 0;
    Continue next = Continue::kReturn;
    abi::ExitReason exit = abi::ExitReason::kNone;
    uint64_t exit_detail = 0;
    // retrieve_secret: bytes for the TVM page at this host address.
    std::optional<std::pair<uint64_t, Bytes>> memory_write;
    uint64_t memory_gpa = 0;
    // run: what to do after entering the TVM.
    uint64_t inject_irq = 0;
    std::optional<std::pair<uint64_t, uint64_t>> hypercall_response;
    bool reply_to_caller = true;  // false for hypercalls forwarded out
    bool reclassify = false;      // copy caller a0..a7 to the hypervisor
    uint64_t clear_ip = 0;        // interrupt-pending bits the caller consumed
    std::string note;             // extra trace detail
  };
  // Write-view granted to a destructor: one domain's saved registers.
  class WriteView {
   public:
    WriteView(HartArchState& state, std::string domain)
        : state_(state), domain_(std::move(domain)) {}
    void SetGpr(int index, uint64_t value);
    void SetCsr(Csr csr, uint64_t value);
    void Note(const std::string& write) { writes_.push_back(domain_ + ":" + write); }
    const std::string& domain() const { return domain_; }
    std::string Writes() const;

   private:
    HartArchState& state_;
    std::string domain_;
    std::vector<std::string> writes_;
  };

  Tsm(Machine machine, TsmOptions options);

  // Trace helpers.
  void Emit(uint32_t hart, std::string phase, std::string call = "-",
            std::string result = "-",
            std::vector<std::pair<std::string, std::string>> extras = {});

  // Save-state areas (always confidential memory).
  uint64_t CurrentArea(uint32_t hart) const;
  HartArchState LoadArea(uint64_t area, const DomainTag& tag);
  void StoreArea(uint64_t area, const HartArchState& state);
  void LightSave(uint32_t hart);
  void LightRestore(uint32_t hart);
  Status SwitchLocked(uint32_t hart, const DomainTag& target);

  // Dispatch.
  std::optional<CallResult> ProcessEcall(uint32_t hart);
  Reply Transform(uint32_t hart, const Request& request);
  void Destruct(uint32_t hart, const Request& request, const Reply& reply);
  std::optional<CallResult> AfterHandler(uint32_t hart, const Request& request,
                                         const Reply& reply);
  CallResult ReadHypervisorResult(uint32_t hart);

  // Hypervisor-facing handlers.
  Reply Promote(uint32_t hart, const Request& request);
  Result<uint32_t> PromoteLocked(uint32_t hart, const Request& request);
  Reply Run(uint32_t hart, const Request& request);
  Reply Destroy(uint32_t hart, const Request& request);
  Status DestroyLocked(uint32_t hart, uint32_t tvm);

  // TVM-facing handlers.
  Reply SharePage(const Request& request);
  Reply RetrieveSecret(uint32_t hart, const Request& request);
  Reply AllowInterrupt(const Request& request);
  Reply HartStart(uint32_t hart, const Request& request);
  Reply HartStop(uint32_t hart, const Request& request);
  Reply HartSuspend(uint32_t hart, const Request& request);
  Reply HartStatus(const Request& request);
  Reply SendIpi(const Request& request);
  Reply RemoteFence(const Request& request);
  Reply SetTimer(const Request& request);

  // Confidential flow.
  void EnterVhart(uint32_t hart);
  void DeliverToRunning(const TvmDescriptor& tvm, uint32_t caller);
  std::optional<CallResult> Pump(uint32_t hart);
  std::optional<CallResult> GuestStep(uint32_t hart, const GuestEvent& event);
  std::optional<CallResult> GuestAccess(uint32_t hart, const GuestEvent& event);
  CallResult ExitToHypervisor(uint32_t hart, abi::ExitReason reason,
                              uint64_t detail, bool reclassify_args);
  void CheckTimer(uint32_t hart);
  void SetLifecycle(uint32_t hart, VHart& vhart, VHartState to);

  TvmDescriptor* FindTvm(uint32_t tvm);
  const TvmDescriptor* FindTvm(uint32_t tvm) const;
  VHart* RunningVhart(uint32_t hart);

  mutable Mutex mu_;
  TsmOptions options_;
  Machine machine_;
  PageAllocator allocator_;
  TraceLog trace_;
  TsmAttestationKey key_;
  std::vector<FsmContext> contexts_;
  std::vector<PageToken> hypervisor_areas_;
  std::map<uint32_t, TvmDescriptor> tvms_;
  uint32_t next_tvm_ = 1;
  uint64_t clock_ = 0;
  AbiStats stats_;
};

}  // namespace acetsm

#endif  // ACETSM_TSM_TSM_H_
