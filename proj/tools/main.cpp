// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "stylefuse/cli.hpp"

int main(int argc, char** argv) { return stylefuse::run_cli(argc, argv, std::cout, std::cerr); }
