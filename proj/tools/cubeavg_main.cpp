#include "cubeavg/cli.hpp"

int main(int argc, char** argv) { return cubeavg::cli::run(argc, argv); }
