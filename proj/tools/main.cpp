#include <iostream>

#include "anytime/cli.hpp"

int main(int argc, char** argv) { return anytime::cli::run(argc, argv, std::cout, std::cerr); }
