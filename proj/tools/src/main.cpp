#include <iostream>

#include "revsent_cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return revsent::cli::run_cli(args, std::cout, std::cerr);
}
