#include "comets/cli.hpp"

int main(int argc, char** argv) { return comets::cli::run(argc, argv); }
