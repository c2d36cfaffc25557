#include "polypersona/cli.hpp"

int main(int argc, char** argv) { return polypersona::cli::run(argc, argv); }
