#include "mafia/cli.hpp"

int main(int argc, char** argv) { return mafia::cli::run(argc, argv); }
