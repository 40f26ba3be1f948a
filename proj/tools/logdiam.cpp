#include <iostream>

#include "logdiam/cli.hpp"

int main(int argc, char** argv) {
  return logdiam::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
