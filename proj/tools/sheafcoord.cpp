#include "sheafcoord/cli.hpp"

int main(int argc, char** argv) { return sheafcoord::cli::run(argc, argv); }
