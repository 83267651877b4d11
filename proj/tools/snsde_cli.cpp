#include "snsde/app.hpp"

int main(int argc, char** argv) { return snsde::cli_main(argc, argv); }
