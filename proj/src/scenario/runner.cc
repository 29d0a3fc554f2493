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

#include "scenario/runner.h"

#include <functional>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

namespace acetsm {
namespace {

// What the most recent directive produced, as seen by expectations.
struct Last {
  ErrorCode error = ErrorCode::kOk;
  uint64_t value = 0;
  uint64_t detail = 0;
  bool running = false;
  abi::ExitReason exit = abi::ExitReason::kNone;

  void Set(const CallResult& r) {
    error = r.error;
    value = r.value;
    detail = r.detail;
    running = r.running;
    exit = r.exit;
  }
  void Set(ErrorCode code) {
    *this = Last();
    error = code;
  }
};

std::string Hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

class Runner {
 public:
  Runner(const Scenario& scenario, const RunOptions& options)
      : scenario_(scenario), options_(options) {}

  ScenarioOutcome Run() {
    ScenarioOutcome out;
    out.name = scenario_.name;
    TsmOptions tsm_options;
    tsm_options.kems = scenario_.kems;
    tsm_options.allocator_max = scenario_.allocator_max;
    auto tsm = Tsm::Boot(scenario_.machine, tsm_options);
    if (!tsm.ok()) {
      out.failures.push_back("machine: " + tsm.status().ToString());
      return out;
    }
    tsm_.emplace(std::move(*tsm));
    tsm_->allocator().set_double_free_check(options_.double_free_check);
    const Interval conf = tsm_->machine().layout().confidential();
    vars_["conf_base"] = conf.begin;
    vars_["conf_end"] = conf.end;
    for (const auto& [addr, bytes] : scenario_.memory) {
      Status s = tsm_->machine().Write(DomainTag::Hypervisor(), addr, bytes);
      if (!s.ok()) out.failures.push_back("memory " + Hex(addr) + ": " + s.ToString());
    }
    checkpoint_ = tsm_->allocator().Report();

    if (options_.threads) {
      RunThreaded();
    } else {
      Last last;
      uint32_t hart = 0;
      for (const Directive& d : scenario_.script) {
        if (d.keyword == "on") {
          hart = OnHart(d).value_or(hart);
        } else if (d.keyword != "barrier") {
          Exec(d, hart, last);
        }
      }
    }

    out.failures.insert(out.failures.end(), failures_.begin(), failures_.end());
    out.expects_checked = expects_;
    out.passed = out.failures.empty();
    out.trace = tsm_->trace().entries();
    out.trace_text = tsm_->trace().Format();
    out.allocator = tsm_->allocator().Report();
    out.stats = tsm_->stats();
    return out;
  }

 private:
  void Fail(const Directive& d, const std::string& message) {
    std::lock_guard lock(mu_);
    failures_.push_back("line " + std::to_string(d.line) + ": " + d.ToString() +
                        ": " + message);
  }

  std::optional<uint32_t> OnHart(const Directive& d) {
    auto n = ParseNumber(d.args[1]);
    if (!n || *n >= tsm_->machine().hart_count()) {
      Fail(d, "no such hart");
      return std::nullopt;
    }
    return static_cast<uint32_t>(*n);
  }

  // Directives between barriers are partitioned by hart and run concurrently;
  // each hart keeps its own notion of the last result.
  void RunThreaded() {
    std::vector<Last> lasts(tsm_->machine().hart_count());
    uint32_t hart = 0;
    std::vector<std::vector<const Directive*>> lanes(lasts.size());
    auto flush = [&] {
      std::vector<std::thread> threads;
      for (uint32_t h = 0; h < lanes.size(); ++h) {
        if (lanes[h].empty()) continue;
        threads.emplace_back([this, h, &lanes, &lasts] {
          for (const Directive* d : lanes[h]) Exec(*d, h, lasts[h]);
        });
      }
      for (auto& t : threads) t.join();
      for (auto& lane : lanes) lane.clear();
    };
    for (const Directive& d : scenario_.script) {
      if (d.keyword == "on") {
        hart = OnHart(d).value_or(hart);
      } else if (d.keyword == "barrier") {
        flush();
      } else {
        lanes[hart].push_back(&d);
      }
    }
    flush();
  }

  std::optional<uint64_t> Value(const Directive& d, const std::string& token,
                                const Last& last) {
    if (!token.empty() && token[0] == '$') {
      const std::string name = token.substr(1);
      if (name == "last") return last.value;
      std::lock_guard lock(mu_);
      auto it = vars_.find(name);
      if (it != vars_.end()) return it->second;
      Fail(d, "unknown variable " + token);
      return std::nullopt;
    }
    auto v = ParseNumber(token);
    if (!v) Fail(d, "not a number: " + token);
    return v;
  }

  // Resolves args[first..] into up to six call arguments.
  std::optional<std::array<uint64_t, 6>> Args(const Directive& d, size_t first,
                                              const Last& last) {
    std::array<uint64_t, 6> args{};
    if (d.args.size() > first + 6) {
      Fail(d, "at most six arguments");
      return std::nullopt;
    }
    for (size_t i = first; i < d.args.size(); ++i) {
      auto v = Value(d, d.args[i], last);
      if (!v) return std::nullopt;
      args[i - first] = *v;
    }
    return args;
  }

  std::optional<std::pair<uint64_t, uint64_t>> CallId(const Directive& d,
                                                      const std::string& name) {
    auto id = abi::ParseCallName(name);
    if (!id) Fail(d, "unknown call " + name);
    return id;
  }

  StagedVm* Staged(const Directive& d, const std::string& vm) {
    auto it = staged_.find(vm);
    if (it == staged_.end()) {
      Fail(d, "vm " + vm + " has not been built");
      return nullptr;
    }
    return &it->second;
  }

  void Rewrite(const Directive& d, StagedVm& vm) {
    Status s = tsm_->WithLock(
        [&](Machine& machine, PageAllocator&) { return vm.tables.WriteTo(machine); });
    if (!s.ok()) Fail(d, s.ToString());
  }

  void Exec(const Directive& d, uint32_t hart, Last& last) {
    const std::string& k = d.keyword;
    const auto& a = d.args;
    if (k == "expect") return Expect(d, hart, last);
    if (k == "build") {
      auto staged = tsm_->WithLock([&](Machine& machine, PageAllocator&) {
        return StageVm(machine, scenario_.images.at(a[0]));
      });
      if (!staged.ok()) return Fail(d, staged.status().ToString());
      std::lock_guard lock(mu_);
      const std::string& n = a[0];
      vars_[n + ".boot"] = staged->boot_hart;
      vars_[n + ".root"] = staged->root;
      vars_[n + ".fdt"] = staged->fdt;
      vars_[n + ".tap"] = staged->tap;
      vars_[n + ".tap_size"] = staged->tap_bytes.size();
      staged_[n] = std::move(*staged);
      last.Set(ErrorCode::kOk);
      return;
    }
    if (k == "map") {
      StagedVm* vm = Staged(d, a[0]);
      auto gpa = Value(d, a[1], last);
      auto host = Value(d, a[2], last);
      if (!vm || !gpa || !host) return;
      PageSize size = PageSize::k4KiB;
      if (a.size() > 3) {
        auto parsed = ParsePageSize(a[3]);
        if (!parsed) return Fail(d, "bad page size");
        size = *parsed;
      }
      Status s = vm->tables.Map(*gpa, *host, size);
      if (!s.ok()) return Fail(d, s.ToString());
      return Rewrite(d, *vm);
    }
    if (k == "set_pte") {
      StagedVm* vm = Staged(d, a[0]);
      auto gpa = Value(d, a[1], last);
      auto level = Value(d, a[2], last);
      if (!vm || !gpa || !level || *level >= gstage::kLevels) {
        return Fail(d, "set_pte <vm> <gpa> <level> <value>");
      }
      uint64_t pte = 0;
      const std::string& spec = a[3];
      if (spec.rfind("ptr:", 0) == 0 || spec.rfind("leaf:", 0) == 0) {
        const bool ptr = spec[0] == 'p';
        auto target = Value(d, spec.substr(ptr ? 4 : 5), last);
        if (!target) return;
        pte = ptr ? gstage::MakePointer(*target)
                  : gstage::MakeLeaf(*target, gstage::kPermMask);
      } else {
        auto v = Value(d, spec, last);
        if (!v) return;
        pte = *v;
      }
      const int lvl = static_cast<int>(*level);
      auto table = vm->tables.TableFor(*gpa, lvl);
      if (!table.ok()) return Fail(d, table.status().ToString());
      const uint64_t entries =
          lvl == gstage::kLevels - 1 ? gstage::kRootEntries : gstage::kTableEntries;
      vm->tables.SetEntry(*table, (*gpa >> gstage::LevelShift(lvl)) & (entries - 1), pte);
      return Rewrite(d, *vm);
    }
    if (k == "write") {
      auto addr = Value(d, a[0], last);
      auto bytes = FromHex(a[1]);
      if (!addr || !bytes) return Fail(d, "write <addr> <hex>");
      Status s = tsm_->WithLock([&](Machine& machine, PageAllocator&) {
        return machine.Write(DomainTag::Hypervisor(), *addr, *bytes);
      });
      last.Set(s.code());
      return;
    }
    if (k == "call" || k == "tvm_call") {
      auto id = CallId(d, a[0]);
      auto args = Args(d, 1, last);
      if (!id || !args) return;
      last.Set(k == "call" ? tsm_->HypervisorCall(hart, id->first, id->second, *args)
                           : tsm_->InjectTvmEcall(hart, id->first, id->second, *args));
      return;
    }
    if (k == "promote") {
      StagedVm* vm = Staged(d, a[0]);
      if (!vm) return;
      last.Set(tsm_->HypervisorCall(hart, abi::kExtTvm, abi::kPromote,
                                    {vm->boot_hart, vm->root, vm->fdt, vm->tap}));
      return;
    }
    if (k == "guest") return Guest(d, last);
    if (k == "irq") {
      auto irq = Value(d, a[0], last);
      if (!irq) return;
      const bool was_running = tsm_->context(hart).flow == Flow::kConfidential;
      tsm_->ExternalInterrupt(hart, *irq);
      if (was_running) {
        CallResult r;
        r.exit = abi::ExitReason::kExternalInterrupt;
        r.value = static_cast<uint64_t>(r.exit);
        r.detail = *irq;
        last.Set(r);
      } else {
        last.Set(ErrorCode::kOk);
      }
      return;
    }
    if (k == "advance_clock") {
      auto ticks = Value(d, a[0], last);
      if (ticks) tsm_->AdvanceClock(*ticks);
      return;
    }
    if (k == "mark") {
      tsm_->Mark(hart, a[0]);
      return;
    }
    if (k == "checkpoint") {
      std::lock_guard lock(mu_);
      checkpoint_ = tsm_->allocator().Report();
      return;
    }
    if (k == "replay_token") {
      auto addr = Value(d, a[0], last);
      auto size = ParsePageSize(a[1]);
      if (!addr || !size) return Fail(d, "replay_token <addr> <size>");
      Status s = tsm_->WithLock([&](Machine& machine, PageAllocator& allocator) {
        auto where = machine.layout().ValidateConfidential(*addr, PageBytes(*size));
        if (!where.ok()) return where.status();
        return allocator.Deallocate(PageToken::ForgeForReplay(*where, *size), machine);
      });
      last.Set(s.code());
      return;
    }
    Fail(d, "unsupported directive");
  }

  void Guest(const Directive& d, Last& last) {
    const auto& a = d.args;
    auto tvm = Value(d, a[0], last);
    auto vhart = Value(d, a[1], last);
    if (!tvm || !vhart) return;
    const std::string& kind = a[2];
    GuestEvent event;
    auto need = [&](size_t n) {
      if (a.size() < n) Fail(d, "guest " + kind + ": missing arguments");
      return a.size() >= n;
    };
    if (kind == "ecall") {
      if (!need(4)) return;
      auto id = CallId(d, a[3]);
      auto args = Args(d, 4, last);
      if (!id || !args) return;
      event = GuestEvent::Ecall(id->first, id->second, *args);
    } else if (kind == "hypercall") {
      if (!need(5)) return;
      auto ext = Value(d, a[3], last);
      auto fid = Value(d, a[4], last);
      auto args = Args(d, 5, last);
      if (!ext || !fid || !args) return;
      event = GuestEvent::Ecall(*ext, *fid, *args);
    } else if (kind == "load") {
      if (!need(5)) return;
      auto gpa = Value(d, a[3], last);
      auto len = Value(d, a[4], last);
      if (!gpa || !len) return;
      event = GuestEvent::Load(*gpa, *len);
    } else if (kind == "store") {
      if (!need(5)) return;
      auto gpa = Value(d, a[3], last);
      auto bytes = FromHex(a[4]);
      if (!gpa || !bytes) return Fail(d, "guest store <gpa> <hex>");
      event = GuestEvent::Store(*gpa, *bytes);
    } else if (kind == "tick" || kind == "irq") {
      if (!need(4)) return;
      auto v = Value(d, a[3], last);
      if (!v) return;
      event = kind == "tick" ? GuestEvent::Tick(*v) : GuestEvent::Irq(*v);
    } else if (kind == "wfi") {
      event = GuestEvent::Wfi();
    } else {
      return Fail(d, "unknown guest event " + kind);
    }
    auto r = tsm_->QueueGuestEvent(static_cast<uint32_t>(*tvm),
                                   static_cast<uint32_t>(*vhart), std::move(event));
    if (!r.ok()) {
      last.Set(r.code());
    } else if (r->has_value()) {
      last.Set(**r);
    } else {
      CallResult pending;
      pending.running = true;
      last.Set(pending);
    }
  }

  // --- expectations -------------------------------------------------------

  void Expect(const Directive& d, uint32_t hart, const Last& last) {
    {
      std::lock_guard lock(mu_);
      ++expects_;
    }
    const auto& a = d.args;
    const std::string& kind = a[0];
    auto arg = [&](size_t i) -> std::optional<std::string> {
      if (i < a.size()) return a[i];
      Fail(d, "missing argument");
      return std::nullopt;
    };
    auto num = [&](size_t i) -> std::optional<uint64_t> {
      auto s = arg(i);
      return s ? Value(d, *s, last) : std::nullopt;
    };
    auto check = [&](bool ok, const std::string& got) {
      if (!ok) Fail(d, "got " + got);
    };
    const std::string got_error(ErrorCodeName(last.error));

    if (kind == "ok") return check(last.error == ErrorCode::kOk, got_error);
    if (kind == "error") {
      auto name = arg(1);
      if (!name) return;
      auto code = ErrorCodeFromName(*name);
      if (!code) return Fail(d, "unknown error name " + *name);
      return check(last.error == *code, got_error);
    }
    if (kind == "value" || kind == "detail") {
      auto v = num(1);
      const uint64_t actual = kind == "value" ? last.value : last.detail;
      if (v) check(actual == *v, Hex(actual));
      return;
    }
    if (kind == "exit") {
      auto name = arg(1);
      if (!name) return;
      auto reason = abi::ParseExitReason(*name);
      if (!reason) return Fail(d, "unknown exit reason " + *name);
      return check(!last.running && last.exit == *reason && last.error == ErrorCode::kOk,
                   last.running ? "still running"
                                : std::string(abi::ExitReasonName(last.exit)) + "/" +
                                      got_error);
    }
    if (kind == "running") {
      return check(last.running && last.error == ErrorCode::kOk,
                   std::string(abi::ExitReasonName(last.exit)) + "/" + got_error);
    }
    if (kind == "trace" || kind == "no_trace" || kind == "trace_count") {
      auto pattern = arg(1);
      if (!pattern) return;
      std::regex re;
      try {
        re = std::regex(*pattern);
      } catch (const std::regex_error&) {
        return Fail(d, "bad regex");
      }
      uint64_t matches = 0;
      for (const auto& e : tsm_->trace().entries()) {
        if (std::regex_search(e.Format(), re)) ++matches;
      }
      if (kind == "trace") return check(matches > 0, "no matching trace entry");
      if (kind == "no_trace") return check(matches == 0, std::to_string(matches) + " matches");
      auto n = num(2);
      if (n) check(matches == *n, std::to_string(matches) + " matches");
      return;
    }
    if (kind == "allocator") {
      auto what = arg(1);
      if (!what) return;
      if (*what != "unchanged") return Fail(d, "expect allocator unchanged");
      const AllocatorReport now = tsm_->allocator().Report();
      std::lock_guard lock(mu_);
      if (!(now == checkpoint_)) {
        failures_.push_back("line " + std::to_string(d.line) +
                            ": allocator changed: free_bytes " +
                            std::to_string(checkpoint_.free_bytes) + " -> " +
                            std::to_string(now.free_bytes));
      }
      return;
    }
    if (kind == "vhart") {
      auto tvm = num(1);
      auto vh = num(2);
      auto state_name = arg(3);
      if (!tvm || !vh || !state_name) return;
      auto want = ParseVHartState(*state_name);
      if (!want) return Fail(d, "unknown state " + *state_name);
      auto state = tsm_->vhart_state(static_cast<uint32_t>(*tvm), static_cast<uint32_t>(*vh));
      if (!state.ok()) return Fail(d, state.status().ToString());
      return check(*state == *want, std::string(VHartStateName(*state)));
    }
    if (kind == "guest_read") {
      auto tvm = num(1);
      auto vh = num(2);
      auto hex = arg(3);
      if (!tvm || !vh || !hex) return;
      auto info = tsm_->vhart_info(static_cast<uint32_t>(*tvm), static_cast<uint32_t>(*vh));
      if (!info.ok()) return Fail(d, info.status().ToString());
      return check(ToHex(info->last_load) == *hex, ToHex(info->last_load));
    }
    if (kind == "memory") {
      auto addr = num(1);
      auto hex = arg(2);
      if (!addr || !hex) return;
      const size_t len = hex->size() / 2;
      auto bytes = tsm_->WithLock([&](Machine& machine, PageAllocator&) {
        return machine.Read(DomainTag::Hypervisor(), *addr, len);
      });
      if (!bytes.ok()) return Fail(d, bytes.status().ToString());
      return check(ToHex(*bytes) == *hex, ToHex(*bytes));
    }
    if (kind == "hyp_reg" || kind == "tvm_reg") {
      const bool hyp = kind == "hyp_reg";
      const size_t base = hyp ? 1 : 3;
      auto name = arg(base);
      auto want = num(base + 1);
      if (!name || !want) return;
      HartArchState regs;
      if (hyp) {
        if (tsm_->context(hart).flow != Flow::kNonConfidential) {
          return Fail(d, "hypervisor is not executing on this hart");
        }
        regs = tsm_->WithLock(
            [&](Machine& machine, PageAllocator&) { return machine.hart(hart).regs; });
      } else {
        auto tvm = num(1);
        auto vh = num(2);
        if (!tvm || !vh) return;
        auto r = tsm_->vhart_registers(static_cast<uint32_t>(*tvm),
                                       static_cast<uint32_t>(*vh));
        if (!r.ok()) return Fail(d, r.status().ToString());
        regs = *r;
      }
      uint64_t actual = 0;
      if (auto gpr = ParseGprName(*name)) {
        actual = regs.gpr(*gpr);
      } else if (auto csr = ParseCsr(*name)) {
        actual = regs.csr(*csr);
      } else {
        return Fail(d, "unknown register " + *name);
      }
      return check(actual == *want, Hex(actual));
    }
    if (kind == "pending") {
      auto tvm = num(1);
      auto vh = num(2);
      auto bit_name = arg(3);
      auto yes = arg(4);
      if (!tvm || !vh || !bit_name || !yes) return;
      uint64_t bit = 0;
      if (*bit_name == "ssip") bit = kSoftwareInterruptBit;
      else if (*bit_name == "stip") bit = kTimerInterruptBit;
      else if (*bit_name == "seip") bit = kExternalInterruptBit;
      else return Fail(d, "pending <tvm> <vhart> ssip|stip|seip yes|no");
      auto r = tsm_->vhart_registers(static_cast<uint32_t>(*tvm), static_cast<uint32_t>(*vh));
      if (!r.ok()) return Fail(d, r.status().ToString());
      const bool set = (r->csr(Csr::kIp) & bit) != 0;
      return check(set == (*yes == "yes"), set ? "pending" : "not pending");
    }
    if (kind == "tvms") {
      auto n = num(1);
      const size_t count = tsm_->TvmIds().size();
      if (n) check(count == *n, std::to_string(count));
      return;
    }
    if (kind == "tvms_disjoint") {
      std::vector<std::pair<uint32_t, Interval>> all;
      for (uint32_t id : tsm_->TvmIds()) {
        for (const Interval& i : tsm_->TvmIntervals(id).value()) all.emplace_back(id, i);
      }
      for (size_t i = 0; i < all.size(); ++i) {
        for (size_t j = i + 1; j < all.size(); ++j) {
          if (all[i].first != all[j].first && all[i].second.Overlaps(all[j].second)) {
            return Fail(d, "TVM " + std::to_string(all[i].first) + " and TVM " +
                               std::to_string(all[j].first) + " share memory");
          }
        }
      }
      return;
    }
    Fail(d, "unknown expectation");
  }

  const Scenario& scenario_;
  RunOptions options_;
  std::optional<Tsm> tsm_;
  std::mutex mu_;  // guards the fields below in threaded mode
  std::map<std::string, uint64_t> vars_;
  std::map<std::string, StagedVm> staged_;
  AllocatorReport checkpoint_;
  std::vector<std::string> failures_;
  size_t expects_ = 0;
};

}  // namespace

ScenarioOutcome RunScenario(const Scenario& scenario, const RunOptions& options) {
  return Runner(scenario, options).Run();
}

}  // namespace acetsm
