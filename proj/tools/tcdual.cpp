#include "tcdual/cli.hpp"

int main(int argc, char** argv) { return tcdual::cli::run_command(argc, argv); }
