#include <iostream>

#include "parahom/cli.hpp"

int main(int argc, char** argv) { return parahom::cli_main(argc, argv, std::cout, std::cerr); }
