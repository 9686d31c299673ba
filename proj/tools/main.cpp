#include "glot/cli.hpp"

int main(int argc, char** argv) { return glot::cli::run(argc, argv); }
