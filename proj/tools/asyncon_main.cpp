#include <iostream>
#include <string>
#include <vector>

#include "asyncon/cli.hpp"

int main(int argc, char** argv) {
  return asyncon::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
