#include "contperc/cli.hpp"

int main(int argc, char** argv) { return contperc::cli::run(argc, argv); }
