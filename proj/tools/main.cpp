#include <iostream>

#include "invscope/cli.hpp"

int main(int argc, char** argv)
{
    return invscope::run_cli(argc, argv, std::cout, std::cerr);
}
