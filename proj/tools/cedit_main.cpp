#include <iostream>

#include "cedit/cli.hpp"

int main(int argc, char** argv) { return cedit::cli::run(argc, argv, std::cout, std::cerr); }
