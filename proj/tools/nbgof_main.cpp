#include "nbgof/cli.hpp"

int main(int argc, char** argv) { return nbgof::cli::dispatch(argc, argv); }
