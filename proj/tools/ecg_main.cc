#include "ecg/cli/run.h"

int main(int argc, char** argv) { return ecg::run(argc, argv); }
