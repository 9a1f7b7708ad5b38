#include "loadpct/cli.hpp"

int main(int argc, char** argv) { return loadpct::cli::run(argc, argv); }
