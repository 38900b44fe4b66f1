#include <iostream>

#include "transglasso/cli.hpp"

int main(int argc, char** argv) { return transglasso::cli::run(argc, argv, std::cout, std::cerr); }
