// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "curio/cli.hpp"

int main(int argc, char** argv) { return curio::cli::run(argc, argv, std::cout, std::cerr); }
