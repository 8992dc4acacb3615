#include <iostream>

#include "did/cli.hpp"

int main(int argc, char** argv) { return did::cli::run(argc, argv, std::cout, std::cerr); }
