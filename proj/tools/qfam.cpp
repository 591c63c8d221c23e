#include <iostream>

#include "qfam/cli.hpp"

int main(int argc, char** argv) { return qfam::run_cli(argc, argv, std::cout, std::cerr); }
