#include "gmf/cli.hpp"

int main(int argc, char** argv) { return gmf::cli::run(argc, argv); }
