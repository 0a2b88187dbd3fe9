// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "d2dsim/cli.hpp"

int main(int argc, char** argv) { return d2dsim::cli_main(argc, argv, std::cout, std::cerr); }
