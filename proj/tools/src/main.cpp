#include <iostream>

#include "srlvm_cli/cli.hpp"

int main(int argc, char** argv) {
  return srlvm::cli::run(argc, argv, std::cout, std::cerr);
}
