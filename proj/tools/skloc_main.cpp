#include <string>
#include <vector>

#include "skloc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return skloc::cli::parse_and_dispatch(args);
}
