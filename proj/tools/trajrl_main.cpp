#include "trajrl/cli.hpp"

int main(int argc, char** argv) { return trajrl::cli::run_cli(argc, argv); }
