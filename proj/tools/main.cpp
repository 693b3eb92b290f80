#include <iostream>

#include <torch/torch.h>

#include "cfmd/cli.hpp"

int main(int argc, char **argv) {
    torch::set_num_threads(1);
    return cfmd::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
