#include <iostream>

#include "dnc/cli.hpp"

int main(int argc, char** argv) {
  return dnc::cli::main(argc, argv, std::cout, std::cerr);
}
