#include <iostream>

#include "crawler/cli.hpp"

int main(int argc, char** argv) { return crawler::run_cli(argc, argv, std::cout, std::cerr); }
