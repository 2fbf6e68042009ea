#include "ccekit/cli.hpp"

int main(int argc, char** argv) { return ccekit::cli::run(argc, argv); }
