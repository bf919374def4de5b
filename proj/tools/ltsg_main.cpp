#include "ltsg/cli.hpp"

int main(int argc, char** argv) { return ltsg::cli::run(argc, argv); }
