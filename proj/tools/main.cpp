#include <iostream>

#include "dpo/cli.hpp"

int main(int argc, char** argv) {
  return dpo::cli_main(argc, argv, std::cout, std::cerr);
}
