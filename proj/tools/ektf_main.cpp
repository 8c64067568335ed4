// SPDX-License-Identifier: Apache-2.0
#include "ektf/cli/app.hpp"

int main(int argc, char** argv) { return ektf::cli::run_app(argc, argv); }
