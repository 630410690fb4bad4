#include <iostream>

#include "hsdid/cli.hpp"

int main(int argc, char** argv) { return hsdid::run_cli(argc, argv, std::cout, std::cerr); }
