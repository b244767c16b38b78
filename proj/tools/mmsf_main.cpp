// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include "mmsf/cli/cli.hpp"

int main(int argc, char** argv) { return mmsf::cli::run(argc, argv); }
