#include "cli.hpp"

int main(int argc, char** argv) { return hpi::cli::run(argc, argv); }
