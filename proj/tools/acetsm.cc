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

// Command-line front end. Talks to the simulator only through the C API.
//
// Exit status: 0 pass, 1 verdict failure, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acetsm/acetsm.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct Globals {
  std::string trace_path;
  bool verbose = false;
  bool threads = false;
};

// Releases a C-API buffer on scope exit.
struct Buffer {
  acetsm_buffer* ptr = nullptr;
  ~Buffer() { acetsm_buffer_free(ptr); }
  std::string str() const {
    return ptr != nullptr ? std::string(acetsm_buffer_str(ptr), acetsm_buffer_size(ptr))
                          : std::string();
  }
};

int Error(const std::string& what, acetsm_status status, const Buffer& detail) {
  const std::string message = detail.str();
  std::cerr << "acetsm: " << what << ": "
            << (message.empty() ? acetsm_status_name(status) : message) << "\n";
  return kExitError;
}

bool ReadFile(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream text;
  text << in.rdbuf();
  out = text.str();
  return true;
}

bool WriteFile(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  return static_cast<bool>(out);
}

acetsm_run_options Options(const Globals& g) {
  acetsm_run_options options = acetsm_run_options_default();
  options.threads = g.threads ? 1 : 0;
  return options;
}

void PrintReport(const char* title, const acetsm_allocator_report& r) {
  std::printf("%s\n", title);
  std::printf("  free_tokens       %llu\n", static_cast<unsigned long long>(r.free_tokens));
  std::printf("  allocated_tokens  %llu\n", static_cast<unsigned long long>(r.allocated_tokens));
  std::printf("  nonempty_nodes    %llu\n", static_cast<unsigned long long>(r.nonempty_nodes));
  std::printf("  token_bytes       %llu\n", static_cast<unsigned long long>(r.token_bytes));
  std::printf("  node_bytes        %llu\n", static_cast<unsigned long long>(r.node_bytes));
  std::printf("  modeled_bytes     %llu\n", static_cast<unsigned long long>(r.modeled_bytes));
  std::printf("  free_bytes        %llu\n", static_cast<unsigned long long>(r.free_bytes));
  std::printf("  allocated_bytes   %llu\n", static_cast<unsigned long long>(r.allocated_bytes));
}

int RunOne(const Globals& g, const std::string& target, bool multiple) {
  acetsm_scenario* scenario = nullptr;
  Buffer error;
  acetsm_status status =
      std::filesystem::exists(target)
          ? acetsm_scenario_load(target.c_str(), &scenario, &error.ptr)
          : acetsm_scenario_bundled(target.c_str(), &scenario, &error.ptr);
  if (status != ACETSM_OK) return Error(target, status, error);
  const acetsm_run_options options = Options(g);
  acetsm_outcome* outcome = nullptr;
  acetsm_scenario_run(scenario, &options, &outcome);
  const bool passed = acetsm_outcome_passed(outcome) != 0;
  std::printf("%-24s %s (%zu expects)\n", acetsm_scenario_name(scenario),
              passed ? "pass" : "FAIL", acetsm_outcome_expects_checked(outcome));
  for (size_t i = 0; i < acetsm_outcome_failure_count(outcome); ++i) {
    std::printf("  %s\n", acetsm_outcome_failure(outcome, i));
  }
  if (g.verbose) std::fputs(acetsm_outcome_trace(outcome), stdout);
  int rc = passed ? kExitPass : kExitFail;
  if (!g.trace_path.empty()) {
    std::string path = g.trace_path;
    if (multiple) path += "." + std::string(acetsm_scenario_name(scenario));
    if (!WriteFile(path, acetsm_outcome_trace(outcome))) {
      std::cerr << "acetsm: cannot write " << path << "\n";
      rc = kExitError;
    }
  }
  acetsm_outcome_free(outcome);
  acetsm_scenario_free(scenario);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidential-VM security monitor simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", acetsm_version());
  Globals g;
  app.add_option("--trace", g.trace_path, "Write the trace of `run` to this file");
  app.add_flag("-v,--verbose", g.verbose, "Print the trace of each scenario run");
  app.add_flag("--threads", g.threads, "One thread per hart");

  std::vector<std::string> targets;
  auto* run = app.add_subcommand("run", "Run scenario files or bundled scenario names");
  run->add_option("scenario", targets, "Path, or bundled name such as benign_boot")
      ->required();

  auto* list = app.add_subcommand("list", "List bundled scenarios");

  bool no_double_free_check = false;
  auto* suite = app.add_subcommand("suite", "Run the adversarial suite");
  suite->add_flag("--disable-double-free-check", no_double_free_check,
                  "Test hook: run with the allocator's double-free check off");

  bool allocator = false;
  uint64_t region_bytes = 1ull << 30;
  std::string fill;
  auto* report = app.add_subcommand("report", "Overhead reports");
  report->add_flag("--allocator", allocator, "Page-token overhead")->required();
  report->add_option("--region-bytes", region_bytes, "Confidential region size")
      ->capture_default_str();
  report->add_option("--fill", fill, "Allocate the region entirely at 4K, 2M or 1G");

  auto* tap = app.add_subcommand("tap", "Owner-side attestation payload tools");
  tap->require_subcommand(1);
  std::string payload_path, out_path, blob_path;
  std::vector<std::string> kems;
  uint64_t seed = 0;
  auto* create = tap->add_subcommand("create", "Seal a payload text file");
  create->add_option("payload", payload_path, "Payload text file")->required();
  create->add_option("-o,--out", out_path, "Output blob")->required();
  create->add_option("--kem", kems, "Recipient KEM (repeatable)")->required();
  create->add_option("--seed", seed, "Nonzero for a reproducible blob");
  auto* inspect = tap->add_subcommand("inspect", "Describe a sealed blob");
  inspect->add_option("blob", blob_path)->required();
  auto* unseal = tap->add_subcommand("unseal", "Unseal with the built-in device keys");
  unseal->add_option("blob", blob_path)->required();
  unseal->add_option("-o,--out", out_path, "Write payload text here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitError;
  }

  if (*run) {
    int rc = kExitPass;
    for (const auto& target : targets) {
      rc = std::max(rc, RunOne(g, target, targets.size() > 1));
    }
    return rc;
  }

  if (*list) {
    for (size_t i = 0; i < acetsm_bundled_count(); ++i) {
      std::printf("%s\n", acetsm_bundled_name(i));
    }
    return kExitPass;
  }

  if (*suite) {
    acetsm_run_options options = Options(g);
    options.double_free_check = no_double_free_check ? 0 : 1;
    acetsm_suite* result = nullptr;
    acetsm_suite_run(&options, &result);
    std::fputs(acetsm_suite_table(result), stdout);
    const bool ok = acetsm_suite_all_defended(result) != 0;
    std::printf("%zu scenarios, %s\n", acetsm_suite_rows(result),
                ok ? "all defended" : "VULNERABLE rows present");
    acetsm_suite_free(result);
    return ok ? kExitPass : kExitFail;
  }

  if (*report) {
    acetsm_allocator_report fresh;
    Buffer error;
    acetsm_status status =
        acetsm_allocator_report_region(region_bytes, "", &fresh, &error.ptr);
    if (status != ACETSM_OK) return Error("report", status, error);
    PrintReport("fresh region", fresh);
    if (!fill.empty()) {
      acetsm_allocator_report full;
      status = acetsm_allocator_report_region(region_bytes, fill.c_str(), &full,
                                              &error.ptr);
      if (status != ACETSM_OK) return Error("report", status, error);
      PrintReport(("fully allocated at " + fill).c_str(), full);
    }
    return kExitPass;
  }

  if (*create) {
    std::string text;
    if (!ReadFile(payload_path, text)) {
      std::cerr << "acetsm: cannot read " << payload_path << "\n";
      return kExitError;
    }
    std::vector<const char*> names;
    for (const auto& kem : kems) names.push_back(kem.c_str());
    Buffer blob, error;
    acetsm_status status = acetsm_tap_create(text.c_str(), names.data(), names.size(),
                                             seed, &blob.ptr, &error.ptr);
    if (status != ACETSM_OK) return Error("tap create", status, error);
    if (!WriteFile(out_path, blob.str())) {
      std::cerr << "acetsm: cannot write " << out_path << "\n";
      return kExitError;
    }
    std::printf("wrote %zu bytes to %s\n", blob.str().size(), out_path.c_str());
    return kExitPass;
  }

  if (*inspect || *unseal) {
    std::string bytes;
    if (!ReadFile(blob_path, bytes)) {
      std::cerr << "acetsm: cannot read " << blob_path << "\n";
      return kExitError;
    }
    const auto* data = reinterpret_cast<const uint8_t*>(bytes.data());
    Buffer result, error;
    acetsm_status status =
        *inspect ? acetsm_tap_inspect(data, bytes.size(), &result.ptr, &error.ptr)
                 : acetsm_tap_unseal(data, bytes.size(), &result.ptr, &error.ptr);
    if (status != ACETSM_OK) {
      Error(*inspect ? "tap inspect" : "tap unseal", status, error);
      return kExitFail;
    }
    if (*unseal && !out_path.empty()) {
      if (!WriteFile(out_path, result.str())) return kExitError;
    } else {
      std::fputs(result.str().c_str(), stdout);
    }
    return kExitPass;
  }
  return kExitError;
}
