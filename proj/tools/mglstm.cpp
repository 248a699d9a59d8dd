#include <iostream>
#include <string>
#include <vector>

#include "mglstm/pipeline.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mglstm::pipeline::run(args, std::cout, std::cerr);
}
