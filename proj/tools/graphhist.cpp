#include "graphhist/cli.hpp"

int main(int argc, char** argv) { return graphhist::run_cli(argc, argv); }
