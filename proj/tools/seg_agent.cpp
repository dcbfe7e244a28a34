#include <iostream>

#include "segagent/cli.hpp"

int main(int argc, char** argv) {
  return segagent::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
