#include "gpro/cli.hpp"

int main(int argc, char** argv) { return gpro::cli_main(argc, argv); }
