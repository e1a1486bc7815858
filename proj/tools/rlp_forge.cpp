#include "rlp/bench/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rlp::bench::run_cli(argc, argv, std::cout, std::cerr); }
