#include "cli.hpp"

int main(int argc, char** argv) { return noisegate::cli::run(argc, argv); }
