#include <iostream>

#include "sndropt/cli.hpp"

int main(int argc, char** argv) { return sndropt::run_cli(argc, argv, std::cout, std::cerr); }
