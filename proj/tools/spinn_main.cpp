#include <iostream>

#include "spinn/commands.hpp"

int main(int argc, char** argv) { return spinn::run_cli(argc, argv, std::cout, std::cerr); }
