#include <string>
#include <vector>

#include "grem/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return grem::cli::main_entry(args);
}
