#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gls::cli::run(argc, argv, std::cout, std::cerr); }
