#include "edesign/cli/app.hpp"

int main(int argc, char** argv) { return edesign::cli::run(argc, argv); }
