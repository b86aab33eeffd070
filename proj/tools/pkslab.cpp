#include <iostream>

#include "pks/cli.hpp"

int main(int argc, char** argv) { return pks::cli_main(argc, argv, std::cout, std::cerr); }
