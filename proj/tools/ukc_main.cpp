#include <iostream>

#include "ukc/driver/cli.hpp"

int main(int argc, char** argv) { return ukc::driver::cli_main(argc, argv, std::cout, std::cerr); }
