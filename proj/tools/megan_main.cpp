//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "commands.h"

int main(int argc, char **argv) {
  return megan::cli::run(argc, argv, std::cout, std::cerr);
}
