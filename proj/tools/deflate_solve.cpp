#include <string>
#include <vector>

#include "deflate/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return deflate::cli::run(args);
}
