#include "dadvi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return dadvi::run_cli(argc, argv, std::cout, std::cerr);
}
