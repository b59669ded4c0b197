#include <iostream>

#include "acquimech/cli.hpp"

int main(int argc, char** argv) {
  return acquimech::cli::run_cli(argc, argv, std::cout, std::cerr);
}
