#include "mmq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return mmq::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
