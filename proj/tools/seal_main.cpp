// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/cli.hpp"

int main(int argc, char** argv) { return seal::run(argc, argv); }
