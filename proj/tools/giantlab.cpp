#include <iostream>

#include "giant/cli.hpp"

int main(int argc, char** argv) { return giant::cli::run_cli(argc, argv, std::cout, std::cerr); }
