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

#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int)
{
  g_stop = 1;
}

}  // namespace

int main(int argc, char **argv)
{
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  ledgerehr::cli::Environment env;
  if (char const *path = std::getenv("LEDGEREHR_CONFIG"))
  {
    env.config_path = path;
  }
  env.stop_requested = [] { return g_stop != 0; };
  return ledgerehr::cli::run({argv + 1, argv + argc}, env, std::cout, std::cerr);
}
