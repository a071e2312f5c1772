#include "cli.hpp"

int main(int argc, char** argv) { return bigraph::cli::dispatch(argc, argv); }
