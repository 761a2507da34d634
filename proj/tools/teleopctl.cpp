#include <iostream>

#include "teleop/cli.hpp"

int main(int argc, char** argv)
{
    return teleop::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
