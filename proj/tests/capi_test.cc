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

// Exercises the shared library strictly through its C header.

#include "acetsm/acetsm.h"

#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

TEST(CApiTest, StatusNames) {
  EXPECT_STREQ(acetsm_status_name(ACETSM_OK), "Ok");
  EXPECT_STREQ(acetsm_status_name(ACETSM_ERR_INVALID_ADDRESS), "InvalidAddress");
  EXPECT_STREQ(acetsm_status_name(ACETSM_ERR_AUTH_FAILURE), "AuthFailure");
  EXPECT_STREQ(acetsm_status_name(12345), "Unknown");
}

TEST(CApiTest, ParseErrorCarriesDiagnostic) {
  const std::string text = "acetsm-scenario v1\n[script]\nexpect ok\n";
  acetsm_scenario* scenario = nullptr;
  acetsm_buffer* error = nullptr;
  EXPECT_EQ(acetsm_scenario_parse(text.data(), text.size(), "bad", &scenario, &error),
            ACETSM_ERR_PARSE);
  EXPECT_EQ(scenario, nullptr);
  ASSERT_NE(error, nullptr);
  EXPECT_NE(std::string(acetsm_buffer_str(error)).find("line 3"), std::string::npos);
  acetsm_buffer_free(error);
}

TEST(CApiTest, RunsBundledScenario) {
  acetsm_scenario* scenario = nullptr;
  ASSERT_EQ(acetsm_scenario_bundled("benign/benign_boot", &scenario, nullptr), ACETSM_OK);
  EXPECT_STREQ(acetsm_scenario_name(scenario), "benign_boot");
  acetsm_outcome* outcome = nullptr;
  ASSERT_EQ(acetsm_scenario_run(scenario, nullptr, &outcome), ACETSM_OK);
  EXPECT_EQ(acetsm_outcome_passed(outcome), 1);
  EXPECT_EQ(acetsm_outcome_failure_count(outcome), 0u);
  EXPECT_EQ(acetsm_outcome_failure(outcome, 0), nullptr);
  EXPECT_GT(acetsm_outcome_trace_entries(outcome), 10u);
  EXPECT_EQ(std::string(acetsm_outcome_trace(outcome)).rfind("# acetsm-trace v1\n", 0), 0u);
  acetsm_allocator_report report;
  ASSERT_EQ(acetsm_outcome_allocator(outcome, &report), ACETSM_OK);
  EXPECT_EQ(report.free_bytes + report.allocated_bytes, 1ull << 30);
  acetsm_outcome_free(outcome);
  acetsm_scenario_free(scenario);
}

TEST(CApiTest, BundledListing) {
  ASSERT_EQ(acetsm_bundled_count(), 15u);
  std::vector<std::string> names;
  for (size_t i = 0; i < acetsm_bundled_count(); ++i) names.push_back(acetsm_bundled_name(i));
  EXPECT_EQ(acetsm_bundled_name(acetsm_bundled_count()), nullptr);
  EXPECT_NE(std::find(names.begin(), names.end(), "attacks/double_free"), names.end());
}

TEST(CApiTest, SuiteAndMutation) {
  acetsm_suite* suite = nullptr;
  ASSERT_EQ(acetsm_suite_run(nullptr, &suite), ACETSM_OK);
  EXPECT_EQ(acetsm_suite_rows(suite), 10u);
  EXPECT_EQ(acetsm_suite_all_defended(suite), 1);
  acetsm_suite_free(suite);

  acetsm_run_options options = acetsm_run_options_default();
  options.double_free_check = 0;
  ASSERT_EQ(acetsm_suite_run(&options, &suite), ACETSM_OK);
  EXPECT_EQ(acetsm_suite_all_defended(suite), 0);
  for (size_t i = 0; i < acetsm_suite_rows(suite); ++i) {
    const std::string name = acetsm_suite_row_name(suite, i);
    EXPECT_EQ(acetsm_suite_row_defended(suite, i), name == "double_free" ? 0 : 1) << name;
  }
  acetsm_suite_free(suite);
}

TEST(CApiTest, AllocatorOverhead) {
  acetsm_allocator_report fresh, full;
  ASSERT_EQ(acetsm_allocator_report_region(1ull << 30, "", &fresh, nullptr), ACETSM_OK);
  EXPECT_EQ(fresh.token_bytes, 9u);
  ASSERT_EQ(acetsm_allocator_report_region(1ull << 30, "4K", &full, nullptr), ACETSM_OK);
  EXPECT_EQ(full.allocated_tokens, 262144u);
  EXPECT_EQ(full.token_bytes, 2359296u);
  acetsm_buffer* error = nullptr;
  EXPECT_EQ(acetsm_allocator_report_region(1ull << 30, "3K", &full, &error),
            ACETSM_ERR_INVALID_PARAM);
  acetsm_buffer_free(error);
}

TEST(CApiTest, TapRoundTripAndTamper) {
  const std::string payload =
      "acetsm-tap-payload v1\n"
      "pcr_code_data " + std::string(96, 'a') + "\n"
      "pcr_fdt " + std::string(96, 'b') + "\n"
      "pcr_boot_hart " + std::string(96, 'c') + "\n"
      "secret 7 0102\n";
  const char* kems[] = {"testkem"};
  acetsm_buffer* blob = nullptr;
  ASSERT_EQ(acetsm_tap_create(payload.c_str(), kems, 1, 9, &blob, nullptr), ACETSM_OK);
  std::vector<uint8_t> bytes(acetsm_buffer_data(blob),
                             acetsm_buffer_data(blob) + acetsm_buffer_size(blob));
  acetsm_buffer_free(blob);

  acetsm_buffer* text = nullptr;
  ASSERT_EQ(acetsm_tap_inspect(bytes.data(), bytes.size(), &text, nullptr), ACETSM_OK);
  EXPECT_NE(std::string(acetsm_buffer_str(text)).find("testkem"), std::string::npos);
  acetsm_buffer_free(text);

  ASSERT_EQ(acetsm_tap_unseal(bytes.data(), bytes.size(), &text, nullptr), ACETSM_OK);
  EXPECT_EQ(acetsm_buffer_str(text), payload);
  acetsm_buffer_free(text);

  bytes.back() ^= 0x01;
  acetsm_buffer* error = nullptr;
  EXPECT_EQ(acetsm_tap_unseal(bytes.data(), bytes.size(), &text, &error),
            ACETSM_ERR_AUTH_FAILURE);
  acetsm_buffer_free(error);

  const char* unknown[] = {"rsa"};
  EXPECT_NE(acetsm_tap_create(payload.c_str(), unknown, 1, 9, &blob, nullptr), ACETSM_OK);
}

}  // namespace
