// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cfgnn/cli.hpp"

int main(int argc, char** argv) {
  return cfgnn::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
