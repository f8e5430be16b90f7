#include "adlex/cli.hpp"

int main(int argc, char** argv) { return adlex::cli::main(argc, argv); }
