#include "edg/cli.h"

#include <iostream>

int main(int argc, char** argv) { return edg::cli::run(argc, argv, std::cout, std::cerr); }
