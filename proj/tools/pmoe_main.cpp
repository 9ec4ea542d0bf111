#include <iostream>

#include "pmoe/cli.hpp"

int main(int argc, char** argv) { return pmoe::run_cli(argc, argv, std::cout, std::cerr); }
