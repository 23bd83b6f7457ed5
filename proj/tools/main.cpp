#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tiltcli::run(argc, argv, std::cout, std::cerr); }
