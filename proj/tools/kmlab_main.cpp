#include "kmlab/cli.hpp"

int main(int argc, char** argv) { return kmlab::run_cli(argc, argv); }
