#include <iostream>

#include "otpqkd/cli.hpp"

int main(int argc, char** argv) { return otpqkd::cli::run(argc, argv, std::cout, std::cerr); }
