// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "afem/cli.hpp"

int main(int argc, char **argv)
{
  return afem::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
