#include "mixscale/cli.hpp"

int main(int argc, char** argv) { return mixscale::cli_main(argc, argv); }
