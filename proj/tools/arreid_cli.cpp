#include <iostream>
#include <string>
#include <vector>

#include "arreid/pipeline.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return arreid::run_pipeline(args, std::cout, std::cerr);
}
