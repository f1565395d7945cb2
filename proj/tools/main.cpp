#include "tisp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tisp::run_cli(argc, argv, std::cout, std::cerr); }
