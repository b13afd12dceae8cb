#include <iostream>

#include "exhaust_tools/cli.hpp"

int main(int argc, char** argv) { return exhaust::tools::run_cli(argc, argv, std::cout, std::cerr); }
