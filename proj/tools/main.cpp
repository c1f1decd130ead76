#include "cli.hpp"

int main(int argc, char** argv) { return ginr::cli::run(argc, argv); }
