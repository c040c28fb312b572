#include "linkreg/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return linkreg::run_cli(argc, argv, std::cout, std::cerr); }
