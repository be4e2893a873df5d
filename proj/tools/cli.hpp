//------------------------------------------------------------------------------
//
//   Copyright 2026 The LedgerEHR Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ledgerehr::cli {

inline constexpr int kExitOk      = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage   = 2;

enum class Verb
{
  Help,
  Keygen,
  Start,
  Inspect,
  Verify,
  Tamper,
  Simulate,
};

std::string to_string(Verb verb);

struct CliCommand
{
  Verb        verb{Verb::Help};
  std::string help_text;  // Verb::Help

  std::string                  out;   // keygen
  std::optional<std::string>   seed;  // keygen, 64 hex chars
  std::optional<std::string>   label; // keygen
  bool                         force{false};
  std::string                  config;  // start
  std::optional<std::uint64_t> run_ms;  // start: stop after this long
  std::string                  data;    // inspect, verify, tamper
  std::optional<std::uint64_t> height;  // inspect, tamper
  std::optional<std::string>   tx;      // inspect
  std::size_t                  offset{0};
  std::uint8_t                 mask{0x01};
  std::string                  scenario;  // simulate
  std::optional<std::string>   trace_out;
  std::optional<std::uint64_t> deadline;
};

class UsageError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct Environment
{
  std::optional<std::string> config_path;  // LEDGEREHR_CONFIG
  std::function<bool()>      stop_requested;
};

/// Throws UsageError naming the offending flag or listing the verbs.
CliCommand parse_args(std::vector<std::string> const &args, Environment const &env = {});

/// Returns the process exit code.
int execute(CliCommand const &command, Environment const &env, std::ostream &out,
            std::ostream &err);

/// parse_args then execute; usage errors go to `err` with exit 2.
int run(std::vector<std::string> const &args, Environment const &env, std::ostream &out,
        std::ostream &err);

}  // namespace ledgerehr::cli
