// SPDX-License-Identifier: Apache-2.0
#include "lrmor/cli.hpp"

int main(int argc, char** argv)
{
    return lrmor::cli::run(argc, argv);
}
