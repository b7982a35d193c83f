#include <iostream>

#include "wsgat/cli.hpp"

int main(int argc, char** argv) { return wsgat::run_cli(argc, argv, std::cout, std::cerr); }
