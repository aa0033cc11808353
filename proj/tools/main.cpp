#include <iostream>

#include "orthols/harness/commands.hpp"

int main(int argc, char **argv) {
  return orthols::harness::run_cli(argc, argv, std::cout, std::cerr);
}
