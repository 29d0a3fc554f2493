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

#include "scenario/scenario.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace acetsm {
namespace {

std::vector<std::string> Split(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Minimum argument counts; the runner checks the rest.
const std::map<std::string, size_t, std::less<>>& DirectiveArity() {
  static const auto* table = new std::map<std::string, size_t, std::less<>>{
      {"build", 1},     {"map", 3},          {"set_pte", 4},  {"write", 2},
      {"call", 1},      {"promote", 1},      {"tvm_call", 1}, {"guest", 3},
      {"irq", 1},       {"advance_clock", 1}, {"mark", 1},    {"checkpoint", 0},
      {"replay_token", 2}, {"on", 2},        {"barrier", 0},  {"expect", 1},
  };
  return *table;
}

const std::set<std::string, std::less<>>& ExpectKinds() {
  static const auto* kinds = new std::set<std::string, std::less<>>{
      "ok", "error", "value", "detail", "exit", "running", "trace", "no_trace",
      "trace_count", "allocator", "vhart", "guest_read", "memory", "hyp_reg",
      "tvm_reg", "pending", "tvms", "tvms_disjoint"};
  return *kinds;
}

class Parser {
 public:
  explicit Parser(std::string name) { scenario_.name = std::move(name); }

  Status Parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    bool header = false;
    while (std::getline(in, raw)) {
      ++line_;
      std::string_view line = Trim(raw);
      if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
        line = Trim(line.substr(0, hash));
      }
      if (line.empty()) continue;
      if (!header) {
        if (line != kScenarioHeader) {
          return Error("header", "expected \"" + std::string(kScenarioHeader) + "\"");
        }
        header = true;
        continue;
      }
      if (line.front() == '[') {
        ACETSM_RETURN_IF_ERROR(Section(line));
        continue;
      }
      ACETSM_RETURN_IF_ERROR(Line(line));
    }
    if (!header) return Error("header", "empty scenario");
    return Status::Ok();
  }

  Scenario Take() { return std::move(scenario_); }

 private:
  Status Error(std::string_view field, std::string message) const {
    return MakeError(ErrorCode::kParseError, "line " + std::to_string(line_) + ": " +
                                                 std::string(field) + ": " + message);
  }

  Result<uint64_t> Number(std::string_view field, std::string_view text) const {
    auto v = ParseNumber(text);
    if (!v) return Error(field, "not a number: " + std::string(text));
    return *v;
  }

  Status Section(std::string_view line) {
    if (line.back() != ']') return Error("section", "unterminated");
    const auto words = Split(line.substr(1, line.size() - 2));
    if (words.empty()) return Error("section", "empty");
    const std::string& kind = words[0];
    if ((kind == "machine" || kind == "memory" || kind == "script") && words.size() == 1) {
      section_ = kind;
      return Status::Ok();
    }
    if (kind == "vm" && words.size() == 2) {
      section_ = "vm";
      vm_ = words[1];
      if (scenario_.images.count(vm_)) return Error("vm", "duplicate image " + vm_);
      VmImage image;
      image.name = vm_;
      image.pages.clear();
      image.secrets.clear();
      scenario_.images[vm_] = image;
      return Status::Ok();
    }
    return Error("section", "unknown section " + std::string(line));
  }

  Status Line(std::string_view line) {
    if (section_ == "machine") return MachineLine(line);
    if (section_ == "memory") return MemoryLine(line);
    if (section_ == "vm") return VmLine(line);
    if (section_ == "script") return ScriptLine(line);
    return Error("section", "content before any section");
  }

  // key = value
  Status KeyValue(std::string_view line, std::string* key, std::string* value) const {
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) return Error("entry", "expected key = value");
    *key = std::string(Trim(line.substr(0, eq)));
    *value = std::string(Trim(line.substr(eq + 1)));
    if (key->empty() || value->empty()) return Error("entry", "expected key = value");
    return Status::Ok();
  }

  Status MachineLine(std::string_view line) {
    std::string key, value;
    ACETSM_RETURN_IF_ERROR(KeyValue(line, &key, &value));
    MachineConfig& m = scenario_.machine;
    if (key == "kems") {
      scenario_.kems.clear();
      for (const auto& name : Split(value)) {
        auto alg = ParseKemName(name);
        if (!alg) return Error(key, "unknown KEM " + name);
        scenario_.kems.push_back(*alg);
      }
      return Status::Ok();
    }
    if (key == "region_alignment" || key == "allocator_max") {
      auto size = ParsePageSize(value);
      if (!size) return Error(key, "expected 4K, 2M, 1G or 512G");
      (key == "region_alignment" ? m.region_alignment : scenario_.allocator_max) = *size;
      return Status::Ok();
    }
    ACETSM_ASSIGN_OR_RETURN(uint64_t v, Number(key, value));
    if (key == "memory_base") m.memory_base = v;
    else if (key == "memory_size") m.memory_size = v;
    else if (key == "confidential_base") m.confidential_base = v;
    else if (key == "confidential_size") m.confidential_size = v;
    else if (key == "harts") m.hart_count = static_cast<uint32_t>(v);
    else return Error(key, "unknown machine field");
    return Status::Ok();
  }

  Status MemoryLine(std::string_view line) {
    std::string key, value;
    ACETSM_RETURN_IF_ERROR(KeyValue(line, &key, &value));
    ACETSM_ASSIGN_OR_RETURN(uint64_t addr, Number("address", key));
    ACETSM_ASSIGN_OR_RETURN(Bytes bytes, Content("memory", value));
    scenario_.memory.emplace_back(addr, std::move(bytes));
    return Status::Ok();
  }

  // hex=<hex> | text=<chars> | fill=<byte>:<count>
  Result<Bytes> Content(std::string_view field, std::string_view spec) const {
    if (spec.rfind("hex=", 0) == 0) {
      auto bytes = FromHex(spec.substr(4));
      if (!bytes) return Error(field, "bad hex");
      return *bytes;
    }
    if (spec.rfind("text=", 0) == 0) {
      std::string_view text = spec.substr(5);
      return Bytes(text.begin(), text.end());
    }
    if (spec.rfind("fill=", 0) == 0) {
      const std::string_view rest = spec.substr(5);
      const size_t colon = rest.find(':');
      if (colon == std::string_view::npos) return Error(field, "fill=<byte>:<count>");
      ACETSM_ASSIGN_OR_RETURN(uint64_t byte, Number(field, rest.substr(0, colon)));
      ACETSM_ASSIGN_OR_RETURN(uint64_t count, Number(field, rest.substr(colon + 1)));
      if (byte > 0xFF || count > (1u << 30)) return Error(field, "fill out of range");
      return Bytes(count, static_cast<uint8_t>(byte));
    }
    return Error(field, "expected hex=, text= or fill=");
  }

  Status VmLine(std::string_view line) {
    VmImage& image = scenario_.images[vm_];
    const auto words = Split(line);
    const std::string& head = words[0];
    if (head == "page") {
      if (words.size() < 2) return Error("page", "missing gpa");
      VmPage page;
      ACETSM_ASSIGN_OR_RETURN(page.gpa, Number("page", words[1]));
      for (size_t i = 2; i < words.size(); ++i) {
        const std::string& w = words[i];
        if (w.rfind("size=", 0) == 0) {
          auto size = ParsePageSize(w.substr(5));
          if (!size || *size == PageSize::k512GiB) return Error("page", "bad size " + w);
          page.size = *size;
        } else if (w.rfind("perms=", 0) == 0) {
          page.perms = 0;
          for (char c : w.substr(6)) {
            if (c == 'r') page.perms |= gstage::kRead;
            else if (c == 'w') page.perms |= gstage::kWrite;
            else if (c == 'x') page.perms |= gstage::kExecute;
            else return Error("page", "bad perms " + w);
          }
        } else if (w == "zero") {
          page.content.clear();
        } else {
          ACETSM_ASSIGN_OR_RETURN(page.content, Content("page", w));
        }
      }
      image.pages.push_back(std::move(page));
      return Status::Ok();
    }
    if (head == "secret") {
      if (words.size() != 3) return Error("secret", "secret <index> <content>");
      ACETSM_ASSIGN_OR_RETURN(uint64_t index, Number("secret", words[1]));
      ACETSM_ASSIGN_OR_RETURN(Bytes value, Content("secret", words[2]));
      image.secrets.push_back({static_cast<uint32_t>(index), std::move(value)});
      return Status::Ok();
    }
    if (head == "reg") {
      // reg <name> = <value>
      if (words.size() != 4 || words[2] != "=") return Error("reg", "reg <name> = <value>");
      ACETSM_ASSIGN_OR_RETURN(uint64_t value, Number("reg", words[3]));
      if (auto gpr = ParseGprName(words[1])) {
        image.boot.set_gpr(*gpr, value);
      } else if (auto csr = ParseCsr(words[1])) {
        image.boot.set_csr(*csr, value);
      } else {
        return Error("reg", "unknown register " + words[1]);
      }
      return Status::Ok();
    }
    std::string key, value;
    ACETSM_RETURN_IF_ERROR(KeyValue(line, &key, &value));
    if (key == "table_area") {
      const auto parts = Split(value);
      if (parts.size() != 2) return Error(key, "table_area = <begin> <end>");
      ACETSM_ASSIGN_OR_RETURN(image.table_area, Number(key, parts[0]));
      ACETSM_ASSIGN_OR_RETURN(image.table_area_end, Number(key, parts[1]));
    } else if (key == "data_area") {
      ACETSM_ASSIGN_OR_RETURN(image.data_area, Number(key, value));
    } else if (key == "staging") {
      ACETSM_ASSIGN_OR_RETURN(image.staging, Number(key, value));
    } else if (key == "cpus") {
      ACETSM_ASSIGN_OR_RETURN(uint64_t cpus, Number(key, value));
      if (cpus > 64) return Error(key, "at most 64 vharts");
      image.cpus = static_cast<uint32_t>(cpus);
    } else if (key == "tap_kems") {
      image.tap_kems.clear();
      for (const auto& name : Split(value)) {
        auto alg = ParseKemName(name);
        if (!alg) return Error(key, "unknown KEM " + name);
        image.tap_kems.push_back(*alg);
      }
    } else if (key == "tap_seed") {
      ACETSM_ASSIGN_OR_RETURN(image.tap_seed, Number(key, value));
    } else if (key == "tap_flip_bit") {
      // <bit> from the start, or end-<n> counted back from the last bit.
      const bool from_end = value.rfind("end-", 0) == 0;
      ACETSM_ASSIGN_OR_RETURN(uint64_t bit,
                              Number(key, from_end ? value.substr(4) : value));
      image.tap_flip_bit = bit;
      image.tap_flip_from_end = from_end;
    } else if (key == "tap_reference") {
      if (value == "image") image.reference = TapReference::kImage;
      else if (value == "wrong_code") image.reference = TapReference::kWrongCode;
      else if (value == "wrong_fdt") image.reference = TapReference::kWrongFdt;
      else if (value == "wrong_boot_hart") image.reference = TapReference::kWrongBootHart;
      else return Error(key, "unknown reference " + value);
    } else {
      return Error(key, "unknown vm field");
    }
    return Status::Ok();
  }

  Status ScriptLine(std::string_view line) {
    Directive d;
    d.line = line_;
    auto words = Split(line);
    d.keyword = words[0];
    d.args.assign(words.begin() + 1, words.end());
    const auto& arity = DirectiveArity();
    auto it = arity.find(d.keyword);
    if (it == arity.end()) return Error("directive", "unknown directive " + d.keyword);
    if (d.args.size() < it->second) {
      return Error(d.keyword, "expected at least " + std::to_string(it->second) +
                                  " argument(s)");
    }
    if (d.keyword == "on" && d.args[0] != "hart") return Error("on", "on hart <n>");
    if (d.is_expect()) {
      if (!ExpectKinds().count(d.args[0])) {
        return Error("expect", "unknown expectation " + d.args[0]);
      }
      bool preceded = false;
      for (const auto& prior : scenario_.script) {
        preceded |= !prior.is_expect() && prior.keyword != "on" && prior.keyword != "barrier";
      }
      if (!preceded) return Error("expect", "expect before any directive");
    }
    if ((d.keyword == "build" || d.keyword == "promote" || d.keyword == "map" ||
         d.keyword == "set_pte") &&
        !scenario_.images.count(d.args[0])) {
      return Error(d.keyword, "unknown vm " + d.args[0]);
    }
    scenario_.script.push_back(std::move(d));
    return Status::Ok();
  }

  Scenario scenario_;
  int line_ = 0;
  std::string section_;
  std::string vm_;
};

}  // namespace

std::string Directive::ToString() const {
  std::string out = keyword;
  for (const auto& a : args) out += " " + a;
  return out;
}

std::optional<uint64_t> ParseNumber(std::string_view text) {
  // Negative decimals wrap, so SBI error codes can be written as -3.
  if (!text.empty() && text[0] == '-') {
    auto magnitude = ParseNumber(text.substr(1));
    if (!magnitude || text.size() < 2 || text[1] == '-') return std::nullopt;
    return ~*magnitude + 1;
  }
  std::string digits;
  for (char c : text) {
    if (c != '_') digits.push_back(c);
  }
  int base = 10;
  std::string_view view = digits;
  if (view.size() > 2 && view[0] == '0' && (view[1] == 'x' || view[1] == 'X')) {
    base = 16;
    view.remove_prefix(2);
  }
  if (view.empty()) return std::nullopt;
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value, base);
  if (ec != std::errc() || ptr != view.data() + view.size()) return std::nullopt;
  return value;
}

Result<Scenario> ParseScenario(std::string_view text, std::string name) {
  Parser parser(std::move(name));
  ACETSM_RETURN_IF_ERROR(parser.Parse(text));
  return parser.Take();
}

Result<Scenario> LoadScenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return MakeError(ErrorCode::kConfigError, "cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  std::string name = path;
  if (const size_t slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const size_t dot = name.rfind(".scn"); dot != std::string::npos) name.resize(dot);
  return ParseScenario(text.str(), name);
}

}  // namespace acetsm
