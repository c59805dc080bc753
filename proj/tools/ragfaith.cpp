#include <iostream>

#include "ragfaith/cli.hpp"

int main(int argc, char** argv) { return ragfaith::run_cli(argc, argv, std::cout, std::cerr); }
