#include "octskin/cli.hpp"

int main(int argc, char** argv) { return octskin::run_cli(argc, argv); }
