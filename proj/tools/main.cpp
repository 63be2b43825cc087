#include "cli.hpp"

int main(int argc, char** argv) { return softaug::cli::run(argc, argv); }
