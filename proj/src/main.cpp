#include "taskmpc/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return taskmpc::cli::run_cli(argc, argv, std::cout, std::cerr);
}
