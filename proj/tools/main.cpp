#include "homfv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return homfv::cli::run(argc, argv, std::cout, std::cerr); }
