#include "ringcal/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ringcal::cli::run(argc, argv, std::cout, std::cerr); }
